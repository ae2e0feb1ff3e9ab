#pragma once

// Shared instance definitions used by unit and acceptance tests.
//
// kCanonicalConfig: two inlets / one outlet, constant apertures, all data
// supports at least 0.35 from the vertex with T = 0.35, so nothing reaches
// the vertex within the horizon: the node-layer fields vanish identically
// and residual slope fits see the arm orders cleanly.
//
// kNodeActiveConfig: same geometry with a nonzero node flux, which drives
// the Kirchhoff data, the node-layer fields and the d_k ladder.
//
// kContinuityConfig: one inlet / two outlets with zero node flux and a long
// horizon, so the inlet trace reaches the vertex and the continuity closure
// is observable.

namespace testcfg {

inline const char* kCanonicalConfig = R"JSON({
  "T": 0.35,
  "expansion_order": 2,
  "gamma": 0.7,
  "delta": 0.1,
  "edges": [
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "-1",
      "v_trans": ["0.3*xi1*sstep(x,0.6,0.72)*(1-sstep(x,0.76,0.88))",
                   "0.3*xi2*sstep(x,0.6,0.72)*(1-sstep(x,0.76,0.88))"],
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0.3*(1+xi1/0.2)*sstep(x,0.65,0.78)*(1-sstep(x,0.78,0.9))*sstep(t,0.05,0.3)",
      "q_base": "6*t^5"
    },
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "-1",
      "v_trans": ["0.3*xi1*sstep(x,0.6,0.72)*(1-sstep(x,0.76,0.88))",
                   "0.3*xi2*sstep(x,0.6,0.72)*(1-sstep(x,0.76,0.88))"],
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0.3*(1+xi2/0.2)*sstep(x,0.65,0.78)*(1-sstep(x,0.78,0.9))*sstep(t,0.05,0.3)",
      "q_base": "6*t^5"
    },
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "2",
      "v_trans": ["0.3*xi1*sstep(x,0.56,0.64)*(1-sstep(x,0.68,0.76))",
                   "0.3*xi2*sstep(x,0.56,0.64)*(1-sstep(x,0.68,0.76))"],
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0.3*(1+xi1/0.2)*sstep(x,0.6,0.69)*(1-sstep(x,0.69,0.78))*sstep(t,0.05,0.3)",
      "q_base": "4*t^5"
    }
  ],
  "node": {
    "ell0": 0.3,
    "cube_halfwidth": 0.25,
    "diffusion": {"a11": "1", "a22": "1", "a33": "1"},
    "phi_node": "0"
  },
  "numerics": {
    "x_points": 97,
    "t_points": 129,
    "disk_stations": 25,
    "disk_nr": 12,
    "disk_ntheta": 24,
    "disk_t_points": 25,
    "voxel_div": 8,
    "node_t_points": 17,
    "L_tr": 8.0,
    "char_grid": 400
  }
})JSON";

inline const char* kNodeActiveConfig = R"JSON({
  "T": 0.4,
  "expansion_order": 1,
  "gamma": 0.7,
  "delta": 0.1,
  "edges": [
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "-1",
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0.5*(1+xi1/0.2)*sstep(x,0.65,0.7)*(1-sstep(x,0.75,0.8))*sstep(t,0.05,0.3)",
      "q_base": "6*t^5"
    },
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "-1",
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0",
      "q_base": "6*t^5"
    },
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "2",
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0",
      "q_base": "4*t^5"
    }
  ],
  "node": {
    "ell0": 0.3,
    "cube_halfwidth": 0.25,
    "diffusion": {"a11": "1", "a22": "1", "a33": "1"},
    "phi_node": "0.02*(1-sstep(xi1,0.26,0.29))*(1-sstep(xi2,0.26,0.29))*(1-sstep(xi3,0.26,0.29))*sstep(t,0.05,0.3)"
  },
  "numerics": {
    "x_points": 48,
    "t_points": 129,
    "disk_stations": 25,
    "disk_nr": 12,
    "disk_ntheta": 24,
    "disk_t_points": 25,
    "voxel_div": 8,
    "node_t_points": 17,
    "L_tr": 8.0,
    "char_grid": 400
  }
})JSON";

inline const char* kContinuityConfig = R"JSON({
  "T": 2.5,
  "expansion_order": 1,
  "gamma": 0.7,
  "delta": 0.1,
  "edges": [
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "-2",
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0",
      "q_base": "6*t^5"
    },
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "1",
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0",
      "q_base": "0"
    },
    {
      "length": 1.0,
      "aperture": "0.2",
      "v_long": "1",
      "diffusion": {"a11": "1", "a12": "0", "a22": "1", "axial": 1.0},
      "phi_lateral": "0",
      "q_base": "0"
    }
  ],
  "node": {
    "ell0": 0.3,
    "cube_halfwidth": 0.25,
    "diffusion": {"a11": "1", "a22": "1", "a33": "1"},
    "phi_node": "0"
  },
  "numerics": {
    "x_points": 48,
    "t_points": 129,
    "disk_stations": 17,
    "disk_nr": 8,
    "disk_ntheta": 16,
    "disk_t_points": 17,
    "voxel_div": 8,
    "node_t_points": 17,
    "L_tr": 8.0,
    "char_grid": 400
  }
})JSON";

}  // namespace testcfg
