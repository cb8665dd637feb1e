"""Writes the yinan_tower bundle JSON files into bundles/yinan_tower."""
import json, math, os
out = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'bundles', 'yinan_tower')
I = [1.0, 0.0, 0.0, 0.0]
def pose(p, q=I): return {"position": [round(v, 6) for v in p], "quaternion": q}
def box(lo, hi):
    c = [(a + b) / 2 / 1000 for a, b in zip(lo, hi)]
    h = [(b - a) / 2 / 1000 for a, b in zip(lo, hi)]
    return {"half_extents": [round(v, 6) for v in h], "pose": pose(c)}
def mat2quat(m):
    # columns are axes
    tr = m[0][0] + m[1][1] + m[2][2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        w = 0.25 * s; x = (m[2][1] - m[1][2]) / s; y = (m[0][2] - m[2][0]) / s; z = (m[1][0] - m[0][1]) / s
    elif m[0][0] > m[1][1] and m[0][0] > m[2][2]:
        s = math.sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2
        w = (m[2][1] - m[1][2]) / s; x = 0.25 * s; y = (m[0][1] + m[1][0]) / s; z = (m[0][2] + m[2][0]) / s
    elif m[1][1] > m[2][2]:
        s = math.sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2
        w = (m[0][2] - m[2][0]) / s; x = (m[0][1] + m[1][0]) / s; y = 0.25 * s; z = (m[1][2] + m[2][1]) / s
    else:
        s = math.sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2
        w = (m[1][0] - m[0][1]) / s; x = (m[0][2] + m[2][0]) / s; y = (m[1][2] + m[2][1]) / s; z = 0.25 * s
    q = [w, x, y, z]
    if w < 0: q = [-v for v in q]
    return [round(v, 12) + 0.0 for v in q]
def axes(x, y, z): return mat2quat([[x[0], y[0], z[0]], [x[1], y[1], z[1]], [x[2], y[2], z[2]]])
X, Y, Z = (1, 0, 0), (0, 1, 0), (0, 0, 1)
def neg(v): return tuple(-a for a in v)
def grasp(x, y, z, tip, opening=0.026): return {"kind": "single", "pose": pose(tip, axes(x, y, z)), "opening": opening}

face_grasps = [
    grasp(Y, X, neg(Z), (0, 0, 0.016)),        # into top, closing y
    grasp(Y, neg(X), Z, (0, 0, 0.008)),        # into bottom
    grasp(X, Z, neg(Y), (0, 0.005, 0.006)),    # into +y, closing x
    grasp(X, neg(Z), Y, (0, -0.005, 0.006)),   # into -y
    grasp(Y, Z, X, (-0.007, 0, 0.019)),        # into -x, closing y
]
cube_grasps = face_grasps + [grasp(Y, neg(Z), neg(X), (0.007, 0, 0.019))]  # into +x
main = box((-12, -12, 0), (12, 12, 24))
nub = box((-20, -4, 4), (-12, 4, 12))
yaw180 = [0.0, 0.0, 0.0, 1.0]

parts = {"schema": "assembly-forge/parts", "version": 1, "classes": [
    {"id": 0, "name": "nub_block", "body": [main, nub], "symmetry": [1, 1, 1, 1, 1, 1],
     "pile_faces": ["top", "bottom", "left", "front", "back"], "grasps": face_grasps},
    {"id": 1, "name": "cube_block", "body": [main], "symmetry": [4, 4, 4, 4, 4, 4],
     "pile_faces": ["top", "bottom", "left", "right", "front", "back"], "grasps": cube_grasps},
]}

def tunnelled_wall(x0, x1):
    return [box((x0, -20, 0), (x1, 20, 3)), box((x0, -20, 13), (x1, 20, 30)),
            box((x0, -20, 3), (x1, -5, 13)), box((x0, 5, 3), (x1, 20, 13))]
rails = [box((-12, -20, 0), (45, -13, 10)), box((-12, 13, 0), (45, 20, 10))]
base = [box((-60, -50, -10), (60, 50, 0))] + tunnelled_wall(-34, -13) + tunnelled_wall(46, 60) + rails
design = {"schema": "assembly-forge/design", "version": 1,
          "base": {"body": base, "pose": pose((0, 0, 0)), "symmetry": [1, 1, 1, 1, 1, 1]},
          "parts": [
              {"name": "A", "class": 0, "goal": pose((0, 0, 0.0005))},
              {"name": "B", "class": 1, "goal": pose((0, 0, 0.025))},
              {"name": "C", "class": 0, "goal": pose((0.033, 0, 0.0005), yaw180)},
              {"name": "D", "class": 1, "goal": pose((0.033, 0, 0.025))},
              {"name": "E", "class": 1, "goal": pose((0, 0, 0.0495))},
          ]}
sequence = {"schema": "assembly-forge/sequence", "version": 1, "disassembly": ["E", "B", "D", "C", "A"]}

down = axes(X, neg(Y), neg(Z))
def cam(name, p, q, w=320, h=240, f=300.0):
    return {"name": name, "pose": pose(p, q), "focal": f, "cx": w / 2, "cy": h / 2, "width": w, "height": h, "near": 0.02, "far": 2.0}
side_view = axes(Y, neg(Z), neg(X))   # looks along -x
jaw = [{"half_extents": [0.003, 0.005, 0.035], "pose": pose((0.003, 0, -0.035))}]
body = [{"half_extents": [0.045, 0.012, 0.01], "pose": pose((0, 0, -0.08))},
        {"half_extents": [0.02, 0.02, 0.09], "pose": pose((0, 0, -0.18))}]
fingers = {"jaw": jaw, "body": body, "finger_width": 0.01, "max_opening": 0.06}
td = axes(X, neg(Y), neg(Z))
workcell = {"schema": "assembly-forge/workcell", "version": 1,
    "environment": [box((-500, -500, -20), (500, 500, 0))],
    "areas": {"pickup": {"center": [0, -0.25, 0.05], "half_extents": [0.1, 0.1, 0.05]},
              "regrasp": {"center": [0.3, 0, 0.25], "half_extents": [0.05, 0.05, 0.05]},
              "assembly": {"center": [0, 0.25, 0.05], "half_extents": [0.06, 0.06, 0.05]}},
    "cameras": [cam("pickup_cam", (0, -0.25, 0.6), down), cam("assembly_cam", (0, 0.25, 0.45), down),
                cam("pose_cam", (0.42, 0, 0.25), side_view)],
    "grippers": [
        {"name": "left", "fingers": fingers, "reach": {"center": [0.1, -0.2, 0.3], "half_extents": [0.45, 0.3, 0.3]},
         "home": pose((-0.25, -0.25, 0.45), td), "camera": "pickup_cam"},
        {"name": "right", "fingers": fingers, "reach": {"center": [0.1, 0.2, 0.3], "half_extents": [0.45, 0.3, 0.3]},
         "home": pose((-0.25, 0.25, 0.45), td), "camera": "assembly_cam"}],
    "assembly_camera": "assembly_cam", "pose_camera": "pose_cam"}
config = {"schema": "assembly-forge/config", "version": 1,
    "lattice": {"step": 0.0, "margin": 0.005, "max_expansions": 2000000},
    "trials": {"count": 5, "seed": 1},
    "noise": {"factor": 2, "amplitude": 0.002, "scale": 8.0},
    "regrasp": {"repose_steps": 16, "hover": 0.03, "padding": 0.004, "pre_approach": 0.15, "tick": 0.002},
    "grasp_label": {"range_steps": 5, "max_tilt": round(math.radians(60), 12)},
    "grids": {"pickup_cell": 0.002, "pose_cell": 0.0005},
    "execution": {"max_attempts": 3, "tolerance_position": 0.001, "tolerance_angle": round(math.radians(1), 12)}}
for name, doc in [("workcell", workcell), ("parts", parts), ("design", design), ("sequence", sequence), ("config", config)]:
    with open(os.path.join(out, name + ".json"), "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
