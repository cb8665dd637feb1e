#pragma once

// Project store and request routing for the HTTP service. Transport lives in http.hpp.
//
//   GET  /projects                          ids in the store
//   PUT  /projects/:id                      bundle document (project_to_json form)
//   GET  /projects/:id                      bundle document
//   PUT  /projects/:id/sequence             sequence document
//   POST /projects/:id/validate             validation report
//   POST /projects/:id/plan                 recipe (409 until validation of the current inputs passes)
//   POST /projects/:id/simulate             {"seed": S, "faults": F} -> simulation document
//   GET  /projects/:id/regrasp-graph        ?class=C, default the first design class
//   GET  /projects/:id/heightmap/:hid       PNG; hid = grasp-<seed>[-label] | pose-<seed>[-label]

#include <charconv>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "forge/dataset.hpp"

namespace forge {

// ---- pipeline documents shared with the CLI ----

inline json simulation_to_json(const ExecutionResult& r, uint64_t seed, int faults, int failed_step = -1, const std::string& cause = "") {
    json j = header("assembly-forge/simulation");
    j["seed"] = seed;
    j["faults"] = faults;
    j["log"] = to_json(r);
    if (failed_step >= 0) j["failure"] = {{"step", failed_step}, {"cause", cause}};
    j["snapshots"] = json::array();
    for (const auto& s : r.snapshots) j["snapshots"].push_back(to_json(s));
    return j;
}

/// Plans and executes from the pile of `seed`. A failed step yields the partial log, not an exception.
inline json simulate_document(const Project& p, const RegraspGraphs& graphs, const ValidationReport& report, uint64_t seed, int faults) {
    if (faults < 0) throw std::invalid_argument("faults must be >= 0");
    Recipe recipe = generate_recipe(p, report);
    ExecutionContext ctx = ExecutionContext::make(p, graphs);
    try {
        return simulation_to_json(execute(ctx, recipe, make_pile(p, seed), seed, FaultModel{faults}), seed, faults);
    } catch (const StepFailed& e) {
        return simulation_to_json(*e.result, seed, faults, e.step, e.cause);
    }
}

// ---- service ----

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;

    static Response json_body(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }
    static Response error(int status, const std::string& message, const json& extra = json::object()) {
        json j = extra;
        j["error"] = message;
        return json_body(j, status);
    }
};

class Service {
public:
    /// Inserts or replaces a project; any earlier validation is dropped.
    void put(const std::string& id, Project p) {
        auto e = std::make_shared<Entry>(std::move(p));
        std::lock_guard lock(m_);
        store_[id] = std::move(e);
    }

    bool contains(const std::string& id) const {
        std::lock_guard lock(m_);
        return store_.count(id) > 0;
    }

    Response handle(const Request& req) {
        try {
            return route(req);
        } catch (const SchemaError& e) {
            return Response::error(400, e.what(), {{"file", e.file}, {"pointer", e.pointer}});
        } catch (const json::exception& e) {
            return Response::error(400, e.what());
        } catch (const std::invalid_argument& e) {
            return Response::error(400, e.what());
        } catch (const std::exception& e) {
            return Response::error(500, e.what());
        }
    }

private:
    struct Entry {
        explicit Entry(Project p) : project(std::move(p)) {}
        const Project project;
        std::mutex m; // guards the caches below
        RegraspGraphs graphs;
        std::optional<ValidationReport> report;

        json graph_json(int cls) {
            std::lock_guard lock(m);
            auto it = graphs.find(cls);
            if (it == graphs.end()) it = graphs.emplace(cls, build_class_graph(project, project.part_class(cls))).first;
            return graph_to_json(it->second, project.workcell.grippers);
        }
        std::optional<std::pair<ValidationReport, RegraspGraphs>> validated() {
            std::lock_guard lock(m);
            if (!report || !report->ok()) return std::nullopt;
            return std::make_pair(*report, graphs);
        }
    };

    std::shared_ptr<Entry> find(const std::string& id) const {
        std::lock_guard lock(m_);
        auto it = store_.find(id);
        return it == store_.end() ? nullptr : it->second;
    }

    static std::vector<std::string> split(const std::string& path) {
        std::vector<std::string> out;
        size_t k = 0;
        while (k < path.size()) {
            size_t e = path.find('/', k);
            if (e == std::string::npos) e = path.size();
            if (e > k) out.push_back(path.substr(k, e - k));
            k = e + 1;
        }
        return out;
    }

    static std::optional<uint64_t> parse_u64(const std::string& s) {
        uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
        return v;
    }

    static json body_json(const Request& req) {
        if (req.body.empty()) return json::object();
        try {
            return json::parse(req.body);
        } catch (const json::parse_error& e) {
            throw SchemaError("", "", std::string("invalid JSON: ") + e.what());
        }
    }

    Response route(const Request& req) {
        auto seg = split(req.path);
        if (seg.empty() || seg[0] != "projects") return Response::error(404, "no route for " + req.path);
        if (seg.size() == 1) {
            if (req.method != "GET") return Response::error(405, "method not allowed");
            json ids = json::array();
            std::lock_guard lock(m_);
            for (const auto& [id, e] : store_) ids.push_back(id);
            return Response::json_body({{"projects", ids}});
        }
        const std::string& id = seg[1];
        if (seg.size() == 2 && req.method == "PUT") {
            bool existed = contains(id);
            put(id, project_from_json(body_json(req)));
            return Response::json_body({{"id", id}}, existed ? 200 : 201);
        }
        auto e = find(id);
        if (!e) return Response::error(404, "unknown project '" + id + "'");
        const Project& p = e->project;
        const std::string what = seg.size() > 2 ? seg[2] : "";

        if (seg.size() == 2 && req.method == "GET") return Response::json_body(project_to_json(p));
        if (seg.size() == 3 && what == "sequence" && req.method == "PUT") {
            Project next = p;
            next.sequence = read_sequence(body_json(req), p.design);
            auto fresh = std::make_shared<Entry>(std::move(next));
            {
                std::lock_guard lock(e->m);
                fresh->graphs = e->graphs; // graphs do not depend on the sequence
            }
            std::lock_guard lock(m_);
            store_[id] = std::move(fresh);
            return Response::json_body(write_sequence(store_[id]->project.sequence, p.design));
        }
        if (seg.size() == 3 && what == "validate" && req.method == "POST") {
            RegraspGraphs graphs;
            ValidationReport rep = validate_authoring(p, &graphs);
            std::lock_guard lock(e->m);
            for (auto& [cls, g] : graphs) e->graphs.insert_or_assign(cls, std::move(g));
            e->report = rep;
            return Response::json_body(to_json(rep));
        }
        if (seg.size() == 3 && what == "plan" && req.method == "POST") {
            auto v = e->validated();
            if (!v) return Response::error(409, "plan requires a passing validation of the current project");
            return Response::json_body(write_recipe(generate_recipe(p, v->first)));
        }
        if (seg.size() == 3 && what == "simulate" && req.method == "POST") {
            auto v = e->validated();
            if (!v) return Response::error(409, "simulate requires a passing validation of the current project");
            const json body = body_json(req);
            JsonIn in(body, "");
            uint64_t seed = in.has("seed") ? in["seed"].unsigned_integer() : 1;
            int faults = in.has("faults") ? in["faults"].integer() : 0;
            if (faults < 0) in["faults"].fail("expected a non-negative integer");
            return Response::json_body(simulate_document(p, v->second, v->first, seed, faults));
        }
        if (seg.size() == 3 && what == "regrasp-graph" && req.method == "GET") {
            int cls = detail::design_classes(p).empty() ? p.classes.at(0).id : detail::design_classes(p).front();
            if (auto it = req.query.find("class"); it != req.query.end()) {
                auto v = parse_u64(it->second);
                bool known = false;
                for (const auto& c : p.classes) known |= v && static_cast<uint64_t>(c.id) == *v;
                if (!known) return Response::error(404, "unknown part class '" + it->second + "'");
                cls = static_cast<int>(*v);
            }
            json j = e->graph_json(cls);
            j["class"] = cls;
            return Response::json_body(j);
        }
        if (seg.size() == 4 && what == "heightmap" && req.method == "GET") {
            auto png_bytes = heightmap_png(p, seg[3]);
            if (!png_bytes) return Response::error(404, "unknown heightmap '" + seg[3] + "'");
            return {200, "image/png", std::string(png_bytes->begin(), png_bytes->end())};
        }
        return Response::error(404, "no route for " + req.method + " " + req.path);
    }

    static std::optional<std::vector<uint8_t>> heightmap_png(const Project& p, std::string hid) {
        bool label = false;
        if (hid.size() > 6 && hid.compare(hid.size() - 6, 6, "-label") == 0) {
            label = true;
            hid.resize(hid.size() - 6);
        }
        auto dash = hid.find('-');
        if (dash == std::string::npos) return std::nullopt;
        const std::string kind = hid.substr(0, dash);
        auto seed = parse_u64(hid.substr(dash + 1));
        if (!seed || (kind != "grasp" && kind != "pose")) return std::nullopt;
        LabelSample s = kind == "grasp" ? grasp_sample(p, p.grasp_sets(), *seed) : pose_sample(p, p.pose_table(), *seed);
        return label ? png::encode_label(s.label) : png::encode_heightmap(s.input);
    }

    mutable std::mutex m_;
    std::map<std::string, std::shared_ptr<Entry>> store_;
};

} // namespace forge
