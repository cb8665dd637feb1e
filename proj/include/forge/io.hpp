#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "forge/regrasp.hpp"
#include "forge/workcell.hpp"

namespace forge {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Malformed input. `pointer` is the JSON pointer of the offending value inside `file`.
struct SchemaError : std::runtime_error {
    std::string file;
    std::string pointer;
    SchemaError(std::string f, std::string p, const std::string& what)
        : std::runtime_error((f.empty() ? "" : f + ": ") + (p.empty() ? "/" : p) + ": " + what), file(std::move(f)), pointer(std::move(p)) {}
};

/// Read cursor that remembers where it is, so every error names its JSON pointer.
class JsonIn {
public:
    JsonIn(const json& j, std::string file, std::string pointer = "") : j_(&j), file_(std::move(file)), ptr_(std::move(pointer)) {}

    const json& raw() const { return *j_; }
    const std::string& pointer() const { return ptr_; }

    [[noreturn]] void fail(const std::string& what) const { throw SchemaError(file_, ptr_, what); }

    bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }
    JsonIn operator[](const std::string& key) const {
        if (!j_->is_object()) fail("expected an object");
        auto it = j_->find(key);
        if (it == j_->end()) JsonIn(*j_, file_, child(key)).fail("missing required field");
        return JsonIn(*it, file_, child(key));
    }
    JsonIn operator[](size_t i) const {
        if (!j_->is_array()) fail("expected an array");
        if (i >= j_->size()) fail("index out of range");
        return JsonIn((*j_)[i], file_, ptr_ + "/" + std::to_string(i));
    }
    size_t size() const {
        if (!j_->is_array()) fail("expected an array");
        return j_->size();
    }
    double number() const {
        if (!j_->is_number()) fail("expected a number");
        return j_->get<double>();
    }
    double positive() const {
        double v = number();
        if (!(v > 0.0)) fail("expected a positive number");
        return v;
    }
    int integer() const {
        if (!j_->is_number_integer()) fail("expected an integer");
        return j_->get<int>();
    }
    uint64_t unsigned_integer() const {
        if (!j_->is_number_unsigned() && !(j_->is_number_integer() && j_->get<int64_t>() >= 0)) fail("expected a non-negative integer");
        return j_->get<uint64_t>();
    }
    std::string str() const {
        if (!j_->is_string()) fail("expected a string");
        return j_->get<std::string>();
    }
    Vec3 vec3() const {
        if (!j_->is_array() || j_->size() != 3) fail("expected [x, y, z]");
        return {(*this)[0].number(), (*this)[1].number(), (*this)[2].number()};
    }
    Transform transform() const {
        Vec3 p = (*this)["position"].vec3();
        JsonIn q = (*this)["quaternion"];
        if (!q.raw().is_array() || q.raw().size() != 4) q.fail("expected [w, x, y, z]");
        Quat quat(q[0].number(), q[1].number(), q[2].number(), q[3].number());
        if (std::abs(quat.norm() - 1.0) > 1e-6) q.fail("quaternion is not unit length");
        return {quat, p};
    }

private:
    std::string child(const std::string& key) const {
        std::string k;
        for (char c : key) {
            if (c == '~') k += "~0";
            else if (c == '/') k += "~1";
            else k += c;
        }
        return ptr_ + "/" + k;
    }

    const json* j_;
    std::string file_;
    std::string ptr_;
};

// ---- writers ----

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json to_json(const Transform& t) {
    const Quat& q = t.rotation();
    return {{"position", to_json(t.translation())}, {"quaternion", json::array({q.w(), q.x(), q.y(), q.z()})}};
}
inline json to_json(const BoxCompound& c) {
    json a = json::array();
    for (const auto& b : c.boxes()) a.push_back({{"half_extents", to_json(b.half_extents)}, {"pose", to_json(b.pose)}});
    return a;
}
inline json to_json(const Area& a) { return {{"center", to_json(a.center)}, {"half_extents", to_json(a.half)}}; }
inline json to_json(const CameraModel& c) {
    return {{"pose", to_json(c.pose)}, {"focal", c.focal}, {"cx", c.cx},   {"cy", c.cy},
            {"width", c.width},        {"height", c.height}, {"near", c.near}, {"far", c.far}};
}
inline json to_json(const FingerModel& f) {
    return {{"jaw", to_json(f.jaw)}, {"body", f.body.empty() ? json::array() : to_json(f.body)}, {"finger_width", f.finger_width},
            {"max_opening", f.max_opening}};
}
inline json to_json(const GraspDefinition& g) {
    if (g.kind == GraspDefinition::Kind::Single) return {{"kind", "single"}, {"pose", to_json(g.pose_a)}, {"opening", g.opening}};
    return {{"kind", "range"}, {"pose_a", to_json(g.pose_a)}, {"pose_b", to_json(g.pose_b)}, {"opening", g.opening}};
}
inline json to_json(const std::array<int, kViewCount>& s) { return json::array({s[0], s[1], s[2], s[3], s[4], s[5]}); }

// ---- readers ----

inline BoxCompound read_compound(const JsonIn& in) {
    std::vector<Box> boxes;
    for (size_t k = 0; k < in.size(); ++k) {
        JsonIn b = in[k];
        Vec3 h = b["half_extents"].vec3();
        if ((h.array() <= 0.0).any()) b["half_extents"].fail("half extents must be positive");
        boxes.push_back({h, b.has("pose") ? b["pose"].transform() : Transform{}});
    }
    if (boxes.empty()) in.fail("expected at least one box");
    return BoxCompound(std::move(boxes));
}
inline Area read_area(const JsonIn& in) {
    Area a{in["center"].vec3(), in["half_extents"].vec3()};
    if ((a.half.array() < 0.0).any()) in["half_extents"].fail("half extents must be non-negative");
    return a;
}
inline CameraModel read_camera(const JsonIn& in) {
    CameraModel c;
    c.pose = in["pose"].transform();
    c.focal = in["focal"].positive();
    c.cx = in["cx"].number();
    c.cy = in["cy"].number();
    c.width = in["width"].integer();
    c.height = in["height"].integer();
    if (c.width <= 0) in["width"].fail("expected a positive integer");
    if (c.height <= 0) in["height"].fail("expected a positive integer");
    c.near = in["near"].positive();
    c.far = in["far"].number();
    if (!(c.far > c.near)) in["far"].fail("far must exceed near");
    return c;
}
inline FingerModel read_fingers(const JsonIn& in) {
    FingerModel f;
    f.jaw = read_compound(in["jaw"]);
    if (in["body"].size() > 0) f.body = read_compound(in["body"]);
    f.finger_width = in["finger_width"].positive();
    f.max_opening = in["max_opening"].positive();
    return f;
}
inline GraspDefinition read_grasp(const JsonIn& in, int cls) {
    const std::string kind = in["kind"].str();
    const double opening = in["opening"].positive();
    if (kind == "single") return GraspDefinition::single(cls, in["pose"].transform(), opening);
    if (kind == "range") {
        try {
            return GraspDefinition::range(cls, in["pose_a"].transform(), in["pose_b"].transform(), opening);
        } catch (const std::invalid_argument& e) {
            in["pose_b"].fail(e.what());
        }
    }
    in["kind"].fail("expected \"single\" or \"range\"");
}
inline std::array<int, kViewCount> read_symmetry(const JsonIn& in) {
    if (in.size() != kViewCount) in.fail("expected 6 symmetry orders (top, bottom, left, right, front, back)");
    std::array<int, kViewCount> s{};
    for (int v = 0; v < kViewCount; ++v) {
        s[v] = in[v].integer();
        if (s[v] != 1 && s[v] != 2 && s[v] != 4) in[v].fail("symmetry order must be 1, 2 or 4");
    }
    return s;
}
inline ViewDirection read_view(const JsonIn& in) {
    const std::string s = in.str();
    for (int v = 0; v < kViewCount; ++v)
        if (s == view_name(static_cast<ViewDirection>(v))) return static_cast<ViewDirection>(v);
    in.fail("unknown view '" + s + "'");
}

inline void check_header(const JsonIn& in, const std::string& schema) {
    if (in["schema"].str() != schema) in["schema"].fail("expected schema \"" + schema + "\"");
    if (in["version"].integer() != kSchemaVersion) in["version"].fail("unsupported schema version");
}
inline json header(const std::string& schema) { return {{"schema", schema}, {"version", kSchemaVersion}}; }

// ---- files ----

inline WorkcellModel read_workcell(const json& j, const std::string& file = "workcell.json") {
    JsonIn in(j, file);
    check_header(in, "assembly-forge/workcell");
    WorkcellModel w;
    if (in["environment"].size() > 0) w.environment = read_compound(in["environment"]);
    w.pickup = read_area(in["areas"]["pickup"]);
    w.regrasp = read_area(in["areas"]["regrasp"]);
    w.assembly = read_area(in["areas"]["assembly"]);
    JsonIn cams = in["cameras"];
    for (size_t k = 0; k < cams.size(); ++k) {
        std::string name = cams[k]["name"].str();
        if (w.find_camera(name)) cams[k]["name"].fail("duplicate camera name");
        w.cameras.push_back({name, read_camera(cams[k])});
    }
    JsonIn gr = in["grippers"];
    if (gr.size() != 2) gr.fail("expected exactly 2 grippers");
    for (int k = 0; k < 2; ++k) {
        JsonIn g = gr[k];
        w.grippers[k] = {g["name"].str(), read_fingers(g["fingers"]), read_area(g["reach"]), g["home"].transform()};
        w.gripper_cameras[k] = g["camera"].str();
        if (!w.find_camera(w.gripper_cameras[k])) g["camera"].fail("unknown camera");
    }
    if (w.grippers[0].name == w.grippers[1].name) gr[1]["name"].fail("duplicate gripper name");
    w.assembly_camera = in["assembly_camera"].str();
    if (!w.find_camera(w.assembly_camera)) in["assembly_camera"].fail("unknown camera");
    w.pose_camera = in["pose_camera"].str();
    if (!w.find_camera(w.pose_camera)) in["pose_camera"].fail("unknown camera");
    return w;
}

inline json write_workcell(const WorkcellModel& w) {
    json j = header("assembly-forge/workcell");
    j["environment"] = w.environment ? to_json(*w.environment) : json::array();
    j["areas"] = {{"pickup", to_json(w.pickup)}, {"regrasp", to_json(w.regrasp)}, {"assembly", to_json(w.assembly)}};
    j["cameras"] = json::array();
    for (const auto& c : w.cameras) {
        json cj = to_json(c.model);
        cj["name"] = c.name;
        j["cameras"].push_back(cj);
    }
    j["grippers"] = json::array();
    for (int k = 0; k < 2; ++k) {
        const auto& g = w.grippers[k];
        j["grippers"].push_back({{"name", g.name},
                                 {"fingers", to_json(g.fingers)},
                                 {"reach", to_json(g.reach)},
                                 {"home", to_json(g.home)},
                                 {"camera", w.gripper_cameras[k]}});
    }
    j["assembly_camera"] = w.assembly_camera;
    j["pose_camera"] = w.pose_camera;
    return j;
}

inline std::vector<PartClass> read_parts(const json& j, const std::string& file = "parts.json") {
    JsonIn in(j, file);
    check_header(in, "assembly-forge/parts");
    std::vector<PartClass> out;
    JsonIn cls = in["classes"];
    for (size_t k = 0; k < cls.size(); ++k) {
        JsonIn c = cls[k];
        PartClass p;
        p.id = c["id"].integer();
        if (p.id < 0) c["id"].fail("class id must be non-negative");
        for (const auto& o : out)
            if (o.id == p.id) c["id"].fail("duplicate class id");
        p.name = c["name"].str();
        p.body = read_compound(c["body"]);
        p.symmetry = read_symmetry(c["symmetry"]);
        JsonIn faces = c["pile_faces"];
        for (size_t f = 0; f < faces.size(); ++f) p.pile_faces.push_back(read_view(faces[f]));
        JsonIn grasps = c["grasps"];
        for (size_t g = 0; g < grasps.size(); ++g) p.grasps.push_back(read_grasp(grasps[g], p.id));
        out.push_back(std::move(p));
    }
    return out;
}

inline json write_parts(const std::vector<PartClass>& classes) {
    json j = header("assembly-forge/parts");
    j["classes"] = json::array();
    for (const auto& c : classes) {
        json faces = json::array();
        for (auto v : c.pile_faces) faces.push_back(view_name(v));
        json grasps = json::array();
        for (const auto& g : c.grasps) grasps.push_back(to_json(g));
        j["classes"].push_back({{"id", c.id},
                                {"name", c.name},
                                {"body", to_json(c.body)},
                                {"symmetry", to_json(c.symmetry)},
                                {"pile_faces", faces},
                                {"grasps", grasps}});
    }
    return j;
}

struct DesignFile {
    AssemblyDesign design;
    std::array<int, kViewCount> base_symmetry{1, 1, 1, 1, 1, 1};
};

inline DesignFile read_design(const json& j, const std::vector<PartClass>& classes, const std::string& file = "design.json") {
    JsonIn in(j, file);
    check_header(in, "assembly-forge/design");
    DesignFile d;
    d.design.base = read_compound(in["base"]["body"]);
    d.design.base_pose = in["base"]["pose"].transform();
    d.base_symmetry = read_symmetry(in["base"]["symmetry"]);
    JsonIn parts = in["parts"];
    for (size_t k = 0; k < parts.size(); ++k) {
        JsonIn p = parts[k];
        DesignPart dp;
        dp.name = p["name"].str();
        for (const auto& o : d.design.parts)
            if (o.name == dp.name) p["name"].fail("duplicate part name");
        dp.part_class = p["class"].integer();
        const PartClass* pc = nullptr;
        for (const auto& c : classes)
            if (c.id == dp.part_class) pc = &c;
        if (!pc) p["class"].fail("unknown part class");
        dp.body = pc->body;
        dp.goal = p["goal"].transform();
        d.design.parts.push_back(std::move(dp));
    }
    return d;
}

inline json write_design(const AssemblyDesign& d, const std::array<int, kViewCount>& base_symmetry) {
    json j = header("assembly-forge/design");
    j["base"] = {{"body", to_json(d.base)}, {"pose", to_json(d.base_pose)}, {"symmetry", to_json(base_symmetry)}};
    j["parts"] = json::array();
    for (const auto& p : d.parts) j["parts"].push_back({{"name", p.name}, {"class", p.part_class}, {"goal", to_json(p.goal)}});
    return j;
}

/// Disassembly order by part name. Rejects unknown names and non-permutations.
inline DisassemblySequence read_sequence(const json& j, const AssemblyDesign& d, const std::string& file = "sequence.json") {
    JsonIn in(j, file);
    check_header(in, "assembly-forge/sequence");
    JsonIn order = in["disassembly"];
    DisassemblySequence seq;
    std::vector<bool> seen(d.parts.size(), false);
    for (size_t k = 0; k < order.size(); ++k) {
        std::string name = order[k].str();
        int idx = -1;
        for (int p = 0; p < static_cast<int>(d.parts.size()); ++p)
            if (d.parts[p].name == name) idx = p;
        if (idx < 0) order[k].fail("unknown part '" + name + "'");
        if (seen[idx]) order[k].fail("part '" + name + "' listed twice");
        seen[idx] = true;
        seq.push_back(idx);
    }
    if (seq.size() != d.parts.size()) order.fail("sequence must list every part exactly once");
    return seq;
}

inline json write_sequence(const DisassemblySequence& seq, const AssemblyDesign& d) {
    json j = header("assembly-forge/sequence");
    j["disassembly"] = json::array();
    for (int p : seq) j["disassembly"].push_back(d.parts.at(p).name);
    return j;
}

inline ProjectConfig read_config(const json& j, const std::string& file = "config.json") {
    JsonIn in(j, file);
    check_header(in, "assembly-forge/config");
    ProjectConfig c;
    JsonIn lat = in["lattice"];
    c.lattice.step = lat["step"].number();
    if (c.lattice.step < 0) lat["step"].fail("step must be non-negative (0 derives it from the design)");
    c.lattice.margin = lat["margin"].positive();
    c.lattice.max_expansions = lat["max_expansions"].unsigned_integer();
    c.trials = in["trials"]["count"].integer();
    if (c.trials < 0) in["trials"]["count"].fail("expected a non-negative integer");
    c.trial_seed = in["trials"]["seed"].unsigned_integer();
    JsonIn n = in["noise"];
    c.noise.factor = n["factor"].integer();
    if (c.noise.factor < 1) n["factor"].fail("expected an integer >= 1");
    c.noise.amplitude = n["amplitude"].number();
    c.noise.scale = n["scale"].positive();
    JsonIn r = in["regrasp"];
    c.regrasp.repose_steps = r["repose_steps"].integer();
    if (c.regrasp.repose_steps < 1) r["repose_steps"].fail("expected an integer >= 1");
    c.regrasp.hover = r["hover"].positive();
    c.regrasp.padding = r["padding"].number();
    c.regrasp.pre_approach = r["pre_approach"].positive();
    c.regrasp.tick = r["tick"].positive();
    JsonIn g = in["grasp_label"];
    c.grasp_label.range_steps = g["range_steps"].integer();
    if (c.grasp_label.range_steps < 2) g["range_steps"].fail("expected an integer >= 2");
    c.grasp_label.max_tilt = g["max_tilt"].positive();
    c.pickup_cell = in["grids"]["pickup_cell"].positive();
    c.pose_cell = in["grids"]["pose_cell"].positive();
    JsonIn e = in["execution"];
    c.max_attempts = e["max_attempts"].integer();
    if (c.max_attempts < 1) e["max_attempts"].fail("expected an integer >= 1");
    c.tolerance_position = e["tolerance_position"].positive();
    c.tolerance_angle = e["tolerance_angle"].positive();
    return c;
}

inline json write_config(const ProjectConfig& c) {
    json j = header("assembly-forge/config");
    j["lattice"] = {{"step", c.lattice.step}, {"margin", c.lattice.margin}, {"max_expansions", c.lattice.max_expansions}};
    j["trials"] = {{"count", c.trials}, {"seed", c.trial_seed}};
    j["noise"] = {{"factor", c.noise.factor}, {"amplitude", c.noise.amplitude}, {"scale", c.noise.scale}};
    j["regrasp"] = {{"repose_steps", c.regrasp.repose_steps}, {"hover", c.regrasp.hover},   {"padding", c.regrasp.padding},
                    {"pre_approach", c.regrasp.pre_approach}, {"tick", c.regrasp.tick}};
    j["grasp_label"] = {{"range_steps", c.grasp_label.range_steps}, {"max_tilt", c.grasp_label.max_tilt}};
    j["grids"] = {{"pickup_cell", c.pickup_cell}, {"pose_cell", c.pose_cell}};
    j["execution"] = {{"max_attempts", c.max_attempts}, {"tolerance_position", c.tolerance_position}, {"tolerance_angle", c.tolerance_angle}};
    return j;
}

// ---- bundle ----

inline json read_json_file(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw SchemaError(p.filename().string(), "", "cannot open " + p.string());
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw SchemaError(p.filename().string(), "", std::string("invalid JSON: ") + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& p, const json& j) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << j.dump(2) << '\n';
}

inline Project project_from_json(const json& workcell, const json& parts, const json& design, const json& sequence, const json& config) {
    Project p;
    p.workcell = read_workcell(workcell);
    p.classes = read_parts(parts);
    DesignFile d = read_design(design, p.classes);
    p.design = std::move(d.design);
    p.base_symmetry = d.base_symmetry;
    p.sequence = read_sequence(sequence, p.design);
    p.config = read_config(config);
    return p;
}

inline Project load_project(const std::filesystem::path& dir) {
    return project_from_json(read_json_file(dir / "workcell.json"), read_json_file(dir / "parts.json"), read_json_file(dir / "design.json"),
                             read_json_file(dir / "sequence.json"), read_json_file(dir / "config.json"));
}

/// The whole bundle as one document, keyed by file stem.
inline json project_to_json(const Project& p) {
    return {{"workcell", write_workcell(p.workcell)},
            {"parts", write_parts(p.classes)},
            {"design", write_design(p.design, p.base_symmetry)},
            {"sequence", write_sequence(p.sequence, p.design)},
            {"config", write_config(p.config)}};
}

/// Inverse of project_to_json. Errors name the member file, e.g. "parts.json".
inline Project project_from_json(const json& bundle) {
    JsonIn in(bundle, "");
    return project_from_json(in["workcell"].raw(), in["parts"].raw(), in["design"].raw(), in["sequence"].raw(), in["config"].raw());
}

inline void save_project(const Project& p, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json all = project_to_json(p);
    for (const auto& [name, doc] : all.items()) write_json_file(dir / (name + ".json"), doc);
}

// ---- regrasp graph ----

inline json graph_to_json(const RegraspGraph& g, const std::array<Gripper, 2>& grippers) {
    json j = header("assembly-forge/regrasp-graph");
    j["samples"] = json::array();
    for (const auto& s : g.samples) j["samples"].push_back({{"grasp", s.def_index}, {"tip", to_json(s.tip)}, {"opening", s.opening}});
    j["seeds"] = json::array();
    for (const auto& s : g.seeds) j["seeds"].push_back(to_json(s));
    j["nodes"] = json::array();
    for (int v = 0; v < static_cast<int>(g.nodes().size()); ++v) {
        const auto& n = g.nodes()[v];
        j["nodes"].push_back({{"id", v}, {"sample", n.sample}, {"pose", n.pose}, {"gripper", grippers[n.gripper].name}});
    }
    j["edges"] = json::array();
    for (const auto& e : g.edges())
        j["edges"].push_back({{"kind", e.kind == RegraspEdge::Kind::Regrasp ? "regrasp" : "repose"}, {"a", e.a}, {"b", e.b}});
    return j;
}

} // namespace forge
