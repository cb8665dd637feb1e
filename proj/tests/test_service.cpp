#include <gtest/gtest.h>

#include <thread>

#include "forge/http.hpp"

using namespace forge;

namespace {

const Project& tower() {
    static const Project p = load_project(FORGE_BUNDLE_DIR);
    return p;
}

const json& tower_recipe() {
    static const json r = write_recipe(generate_recipe(tower(), validate_authoring(tower())));
    return r;
}

json sequence_doc(const std::vector<std::string>& names) {
    json j = header("assembly-forge/sequence");
    j["disassembly"] = names;
    return j;
}

Response call(Service& s, const std::string& method, const std::string& path, const std::string& body = "",
              std::map<std::string, std::string> query = {}) {
    return s.handle({method, path, std::move(query), body});
}

} // namespace

TEST(Service, GetProjectMirrorsTheBundleFiles) {
    Service s;
    s.put("tower", tower());
    auto r = call(s, "GET", "/projects/tower");
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.content_type, "application/json");
    EXPECT_EQ(r.body, project_to_json(tower()).dump());
    EXPECT_EQ(json::parse(call(s, "GET", "/projects").body)["projects"], json::array({"tower"}));
}

TEST(Service, UnknownIdsAre404) {
    Service s;
    s.put("tower", tower());
    EXPECT_EQ(call(s, "GET", "/projects/nope").status, 404);
    EXPECT_EQ(call(s, "POST", "/projects/nope/validate").status, 404);
    EXPECT_EQ(call(s, "GET", "/projects/tower/heightmap/nope").status, 404);
    EXPECT_EQ(call(s, "GET", "/projects/tower/heightmap/grasp-x").status, 404);
    EXPECT_EQ(call(s, "GET", "/projects/tower/regrasp-graph", "", {{"class", "9"}}).status, 404);
    EXPECT_EQ(call(s, "GET", "/elsewhere").status, 404);
}

TEST(Service, PutProjectCreatesThenReplaces) {
    Service s;
    std::string body = project_to_json(tower()).dump();
    EXPECT_EQ(call(s, "PUT", "/projects/a", body).status, 201);
    EXPECT_EQ(call(s, "PUT", "/projects/a", body).status, 200);
    json bad = project_to_json(tower());
    bad["parts"]["classes"][0]["symmetry"][2] = 5;
    auto r = call(s, "PUT", "/projects/b", bad.dump());
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(json::parse(r.body)["pointer"], "/classes/0/symmetry/2");
    EXPECT_EQ(json::parse(r.body)["file"], "parts.json");
    EXPECT_EQ(call(s, "PUT", "/projects/c", "{not json").status, 400);
}

TEST(Service, PutSequenceRejectsNonPermutations) {
    Service s;
    s.put("tower", tower());
    auto dup = call(s, "PUT", "/projects/tower/sequence", sequence_doc({"E", "E", "D", "C", "A"}).dump());
    EXPECT_EQ(dup.status, 400);
    EXPECT_EQ(json::parse(dup.body)["pointer"], "/disassembly/1");
    EXPECT_EQ(call(s, "PUT", "/projects/tower/sequence", sequence_doc({"E", "B", "D", "C"}).dump()).status, 400);
    EXPECT_EQ(call(s, "PUT", "/projects/tower/sequence", sequence_doc({"E", "B", "D", "C", "Z"}).dump()).status, 400);
    // the stored project is untouched
    EXPECT_EQ(call(s, "GET", "/projects/tower").body, project_to_json(tower()).dump());
}

TEST(Service, PlanBeforeValidateIs409) {
    Service s;
    s.put("tower", tower());
    EXPECT_EQ(call(s, "POST", "/projects/tower/plan").status, 409);
    EXPECT_EQ(call(s, "POST", "/projects/tower/simulate").status, 409);
}

TEST(Service, ValidateThenPlanReturnsTheRecipe) {
    Service s;
    s.put("tower", tower());
    auto v = call(s, "POST", "/projects/tower/validate");
    ASSERT_EQ(v.status, 200);
    EXPECT_TRUE(json::parse(v.body)["ok"].get<bool>());
    auto r = call(s, "POST", "/projects/tower/plan");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body, tower_recipe().dump());

    // a new sequence invalidates the earlier pass
    auto put = call(s, "PUT", "/projects/tower/sequence", write_sequence(tower().sequence, tower().design).dump());
    EXPECT_EQ(put.status, 200);
    EXPECT_EQ(call(s, "POST", "/projects/tower/plan").status, 409);
}

TEST(Service, BlockedFirstSequenceFailsValidationAndBlocksPlanning) {
    Service s;
    s.put("tower", tower());
    ASSERT_EQ(call(s, "PUT", "/projects/tower/sequence", sequence_doc({"A", "B", "C", "D", "E"}).dump()).status, 200);
    json rep = json::parse(call(s, "POST", "/projects/tower/validate").body);
    EXPECT_FALSE(rep["ok"].get<bool>());
    const json& seq = rep["checks"][4];
    EXPECT_EQ(seq["name"], "sequence");
    EXPECT_EQ(seq["status"], "fail");
    EXPECT_EQ(seq["issues"][0]["part"], "A");
    EXPECT_EQ(seq["issues"][0]["step"], kStepSequence);
    EXPECT_EQ(call(s, "POST", "/projects/tower/plan").status, 409);
}

TEST(Service, RegraspGraphIsNodeEdgeJson) {
    Service s;
    s.put("tower", tower());
    auto r = call(s, "GET", "/projects/tower/regrasp-graph", "", {{"class", "1"}});
    ASSERT_EQ(r.status, 200);
    json g = json::parse(r.body);
    EXPECT_EQ(g["schema"], "assembly-forge/regrasp-graph");
    EXPECT_EQ(g["class"], 1);
    ASSERT_FALSE(g["nodes"].empty());
    ASSERT_FALSE(g["edges"].empty());
    const size_t n = g["nodes"].size();
    for (size_t k = 0; k < n; ++k) {
        EXPECT_EQ(g["nodes"][k]["id"], k);
        std::string grip = g["nodes"][k]["gripper"];
        EXPECT_TRUE(grip == tower().workcell.grippers[0].name || grip == tower().workcell.grippers[1].name);
        EXPECT_LT(g["nodes"][k]["sample"].get<size_t>(), g["samples"].size());
    }
    for (const auto& e : g["edges"]) {
        EXPECT_LT(e["a"].get<size_t>(), n);
        EXPECT_LT(e["b"].get<size_t>(), n);
        EXPECT_TRUE(e["kind"] == "regrasp" || e["kind"] == "repose");
    }
    json direct = graph_to_json(build_class_graph(tower(), tower().part_class(1)), tower().workcell.grippers);
    direct["class"] = 1;
    EXPECT_EQ(g, direct);
}

TEST(Service, HeightmapIsThePng) {
    Service s;
    s.put("tower", tower());
    auto r = call(s, "GET", "/projects/tower/heightmap/grasp-4");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.content_type, "image/png");
    LabelSample ls = grasp_sample(tower(), tower().grasp_sets(), 4);
    auto bytes = png::encode_heightmap(ls.input);
    EXPECT_EQ(r.body, std::string(bytes.begin(), bytes.end()));
    auto label = call(s, "GET", "/projects/tower/heightmap/grasp-4-label");
    auto lbytes = png::encode_label(ls.label);
    EXPECT_EQ(label.body, std::string(lbytes.begin(), lbytes.end()));
    auto pose = call(s, "GET", "/projects/tower/heightmap/pose-4");
    EXPECT_EQ(pose.status, 200);
    EXPECT_EQ(pose.body.substr(1, 3), "PNG");
}

TEST(Service, SimulateReturnsLogAndSnapshots) {
    Service s;
    s.put("tower", tower());
    ASSERT_EQ(call(s, "POST", "/projects/tower/validate").status, 200);
    auto a = call(s, "POST", "/projects/tower/simulate", R"({"seed": 3})");
    ASSERT_EQ(a.status, 200);
    json j = json::parse(a.body);
    EXPECT_EQ(j["schema"], "assembly-forge/simulation");
    EXPECT_EQ(j["log"]["schema"], "assembly-forge/execution-log");
    EXPECT_TRUE(j["log"]["success"].get<bool>());
    EXPECT_EQ(j["snapshots"].size(), 6u);
    EXPECT_FALSE(j.contains("failure"));
    EXPECT_EQ(call(s, "POST", "/projects/tower/simulate", R"({"seed": 3})").body, a.body);

    auto f = json::parse(call(s, "POST", "/projects/tower/simulate", R"({"seed": 3, "faults": 3})").body);
    EXPECT_FALSE(f["log"]["success"].get<bool>());
    EXPECT_EQ(f["failure"]["step"], 0);
    auto bad = call(s, "POST", "/projects/tower/simulate", R"({"seed": -1})");
    EXPECT_EQ(bad.status, 400);
    EXPECT_EQ(json::parse(bad.body)["pointer"], "/seed");
}

TEST(Service, DistinctProjectsValidateConcurrently) {
    Service s;
    s.put("a", tower());
    s.put("b", tower());
    Response ra, rb;
    std::thread ta([&] { ra = call(s, "POST", "/projects/a/validate"); });
    std::thread tb([&] { rb = call(s, "POST", "/projects/b/validate"); });
    ta.join();
    tb.join();
    EXPECT_EQ(ra.body, rb.body);
    EXPECT_EQ(call(s, "POST", "/projects/a/plan").body, call(s, "POST", "/projects/b/plan").body);
}

TEST(Http, ServesTheSameResponses) {
    Service s;
    s.put("tower", tower());
    httplib::Server server;
    bind_routes(server, s);
    int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client c("127.0.0.1", port);
    auto get = c.Get("/projects/tower");
    ASSERT_TRUE(get);
    EXPECT_EQ(get->status, 200);
    EXPECT_EQ(get->body, project_to_json(tower()).dump());
    auto put = c.Put("/projects/tower/sequence", sequence_doc({"E", "E", "D", "C", "A"}).dump(), "application/json");
    ASSERT_TRUE(put);
    EXPECT_EQ(put->status, 400);
    auto plan = c.Post("/projects/tower/plan", "", "application/json");
    ASSERT_TRUE(plan);
    EXPECT_EQ(plan->status, 409);
    auto graph = c.Get("/projects/tower/regrasp-graph?class=0");
    ASSERT_TRUE(graph);
    EXPECT_EQ(json::parse(graph->body)["class"], 0);
    auto png = c.Get("/projects/tower/heightmap/pose-2");
    ASSERT_TRUE(png);
    EXPECT_EQ(png->get_header_value("Content-Type"), "image/png");
    EXPECT_EQ(c.Get("/projects/missing")->status, 404);

    server.stop();
    t.join();
}
