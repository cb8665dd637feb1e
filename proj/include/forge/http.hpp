#pragma once

// Eigen first: httplib pulls in <resolv.h>, whose _res macro breaks Eigen's headers.
#include "forge/service.hpp"

#include "httplib.h"

namespace forge {

/// Routes every GET, PUT and POST on `server` through `service`.
inline void bind_routes(httplib::Server& server, Service& service) {
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        Request r{req.method, req.path, {}, req.body};
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        Response out = service.handle(r);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    server.Get(".*", handler);
    server.Put(".*", handler);
    server.Post(".*", handler);
}

} // namespace forge
