#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "forge/http.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;

struct Options {
    std::string bundle = "bundles/yinan_tower";
    std::string out = ".";
    std::string stamp; // defaults to <out>/validation.json
    std::string kind = "grasp";
    int count = 10;
    uint64_t seed = 1;
    int faults = 0;
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string id;
};

fs::path stamp_path(const Options& o) { return o.stamp.empty() ? fs::path(o.out) / "validation.json" : fs::path(o.stamp); }

void log_report(const ValidationReport& r) {
    for (const auto& c : r.checks) {
        spdlog::info("check {:<16} {}", c.name, to_string(c.status));
        for (const auto& i : c.issues) spdlog::warn("  step {} {}{}", i.step, i.part.empty() ? "" : "[" + i.part + "] ", i.message);
    }
}

int cmd_validate(const Options& o) {
    Project p = load_project(o.bundle);
    ValidationReport r = validate_authoring(p);
    log_report(r);
    fs::create_directories(o.out);
    write_json_file(stamp_path(o), to_json(r));
    spdlog::info("wrote {}", stamp_path(o).string());
    return r.ok() ? kExitOk : kExitInvalid;
}

int cmd_plan(const Options& o) {
    Project p = load_project(o.bundle);
    const fs::path stamp = stamp_path(o);
    if (!fs::exists(stamp)) {
        spdlog::error("no validation stamp at {}; run validate first", stamp.string());
        return kExitInvalid;
    }
    json s = read_json_file(stamp);
    if (!s.value("ok", false) || s.value("digest", uint64_t{0}) != project_digest(p)) {
        spdlog::error("validation stamp {} does not pass for the current bundle", stamp.string());
        return kExitInvalid;
    }
    ValidationReport r = validate_authoring(p);
    if (!r.ok()) {
        log_report(r);
        return kExitInvalid;
    }
    fs::create_directories(o.out);
    const fs::path out = fs::path(o.out) / "recipe.json";
    write_json_file(out, write_recipe(generate_recipe(p, r)));
    spdlog::info("wrote {}", out.string());
    return kExitOk;
}

int cmd_labelgen(const Options& o) {
    Project p = load_project(o.bundle);
    write_dataset(p, parse_label_kind(o.kind), o.count, o.seed, o.out);
    spdlog::info("wrote {} {} samples to {}", o.count, o.kind, o.out);
    return kExitOk;
}

int cmd_simulate(const Options& o) {
    Project p = load_project(o.bundle);
    RegraspGraphs graphs;
    ValidationReport r = validate_authoring(p, &graphs);
    if (!r.ok()) {
        log_report(r);
        return kExitInvalid;
    }
    json doc = simulate_document(p, graphs, r, o.seed, o.faults);
    fs::create_directories(o.out);
    const fs::path out = fs::path(o.out) / "simulation.json";
    write_json_file(out, doc);
    spdlog::info("wrote {}", out.string());
    if (doc.contains("failure")) {
        spdlog::error("step {} failed: {}", doc["failure"]["step"].get<int>(), doc["failure"]["cause"].get<std::string>());
        return kExitError;
    }
    return kExitOk;
}

int cmd_serve(const Options& o) {
    Service service;
    const std::string id = o.id.empty() ? fs::path(o.bundle).lexically_normal().filename().string() : o.id;
    service.put(id, load_project(o.bundle));
    httplib::Server server;
    bind_routes(server, service);
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) { spdlog::debug("{} {} -> {}", req.method, req.path, res.status); });
    spdlog::info("serving project '{}' on http://{}:{}/projects/{}", id, o.host, o.port, id);
    if (!server.listen(o.host, o.port)) {
        spdlog::error("cannot listen on {}:{}", o.host, o.port);
        return kExitError;
    }
    return kExitOk;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("assembly-forge");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    if (const char* lvl = std::getenv("ASSEMBLY_FORGE_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    Options o;
    CLI::App app{"assembly-forge: authoring validation, planning and simulation for robotic assembly"};
    app.require_subcommand(1);

    auto common = [&o](CLI::App* c) {
        c->add_option("--bundle", o.bundle, "Project bundle directory")->capture_default_str();
        c->add_option("--out", o.out, "Output directory")->capture_default_str();
    };
    auto* validate = app.add_subcommand("validate", "Run the authoring checks and write validation.json");
    common(validate);
    auto* plan = app.add_subcommand("plan", "Write recipe.json; needs a passing validation.json for the same bundle");
    common(plan);
    plan->add_option("--stamp", o.stamp, "Validation stamp (default <out>/validation.json)");
    auto* labelgen = app.add_subcommand("labelgen", "Write a labeled heightmap dataset");
    common(labelgen);
    labelgen->add_option("--kind", o.kind, "grasp or pose")->check(CLI::IsMember({"grasp", "pose"}))->capture_default_str();
    labelgen->add_option("--count", o.count, "Number of samples")->check(CLI::NonNegativeNumber)->capture_default_str();
    labelgen->add_option("--seed", o.seed, "Dataset seed")->capture_default_str();
    auto* simulate = app.add_subcommand("simulate", "Execute the plan from a random pile and write simulation.json");
    common(simulate);
    simulate->add_option("--seed", o.seed, "Pile and base placement seed")->capture_default_str();
    simulate->add_option("--faults", o.faults, "Failed picks injected at the start of every step")->check(CLI::NonNegativeNumber)->capture_default_str();
    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    serve->add_option("--bundle", o.bundle, "Project bundle loaded at startup")->capture_default_str();
    serve->add_option("--port", o.port, "Port")->capture_default_str();
    serve->add_option("--host", o.host, "Bind address")->capture_default_str();
    serve->add_option("--id", o.id, "Project id (default the bundle directory name)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*validate) return cmd_validate(o);
        if (*plan) return cmd_plan(o);
        if (*labelgen) return cmd_labelgen(o);
        if (*simulate) return cmd_simulate(o);
        return cmd_serve(o);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    }
}
