//! Example configurations, one per verb; each runs as printed.

use serde_json::{json, Value};

use crate::TemplateName;

fn cubic_sweep() -> Value {
    json!({
        "window": { "center": [[0.0, 0.0], [0.0, 0.0]], "half_width": 2.0 },
        "k": 2, "max_preperiod": 4, "max_period": 3, "n_seeds": 512, "seed": 7
    })
}

fn chebyshev() -> Value {
    json!({ "solve": { "constraints": [{ "critical": 0, "m": 2, "p": 1 }], "seed": [[-1.9, 0.0]] } })
}

fn period_three_search() -> Value {
    json!({ "seed": [0.23, 0.0], "radius": 0.05 })
}

pub fn template(verb: TemplateName) -> Value {
    let quadratic = json!({ "kind": "quadratic" });
    let cubic = json!({ "kind": "branner_hubbard", "degree": 3 });
    let (family, params) = match verb {
        TemplateName::Render => (
            quadratic,
            json!({
                "bbox": { "x0": -2.5, "x1": 1.5, "y0": -2.0, "y1": 2.0 },
                "resolution": [256, 256], "quantity": "escape", "depth": 200
            }),
        ),
        TemplateName::SolvePer => (quadratic, json!({ "n": 1, "w": [0.5, 0.0], "seed_s": [0.1, 0.0], "seed_z": [0.25, 0.0] })),
        TemplateName::ContinuePer => (
            quadratic,
            json!({ "n": 1, "theta_a": 0.1, "theta_b": 0.4, "steps": 30, "seed_s": [0.33, 0.05], "seed_z": [0.4, 0.3] }),
        ),
        TemplateName::SolveNeutral => (
            quadratic,
            json!({ "target": { "periods": [1], "thetas": [0.5] }, "seeds": [[[-0.7, 0.0]]] }),
        ),
        TemplateName::FindMisiurewicz => (quadratic, chebyshev()),
        TemplateName::FindWindow => (
            quadratic,
            json!({ "certificate": chebyshev(), "critical": 0, "search": period_three_search() }),
        ),
        TemplateName::BabyMandel => (
            quadratic,
            json!({ "certificate": chebyshev(), "critical": 0, "search": period_three_search(),
                    "resolution": 128, "max_iter": 200 }),
        ),
        TemplateName::StraightenCheck => (
            quadratic,
            json!({ "certificate": chebyshev(), "critical": 0, "search": period_three_search(),
                    "probes": [{ "zeta": [0.0, 0.0], "mode": "center" }, { "zeta": [-1.0, 0.0], "mode": "center" }] }),
        ),
        TemplateName::EmbedSample => (
            cubic,
            json!({ "certificate": { "sweep": { "sweep": cubic_sweep(), "index": 0 } },
                    "model_input": [[0.0, 0.0], [0.0, 0.0]] }),
        ),
        TemplateName::Boxdim => (
            quadratic,
            json!({ "source": { "escape_boundary": {
                        "bbox": { "x0": -2.5, "x1": 1.5, "y0": -2.0, "y1": 2.0 },
                        "resolution": [512, 512], "depth": 500 } },
                    "scales": [0, 6] }),
        ),
        TemplateName::PrerepToNeutral => (
            cubic,
            json!({ "target": { "periods": [1, 1], "thetas": [0.5, 0.3333333333333333] },
                    "certificates": [{ "sweep": { "sweep": cubic_sweep(), "index": 0 } }],
                    "experiment": { "radii": [0.2, 0.1, 0.05], "n_seeds": 64 } }),
        ),
        TemplateName::NeutralToPrerep => (
            quadratic,
            json!({ "target": { "periods": [1], "thetas": [0.5] },
                    "solution": { "solve": { "target": { "periods": [1], "thetas": [0.5] }, "seeds": [[[-0.7, 0.0]]] } },
                    "experiment": { "radii": [0.2, 0.1], "n_seeds": 64 } }),
        ),
        TemplateName::Stratification => (
            cubic,
            json!({ "chart": { "origin": [[0.0, 0.0], [0.0, 0.0]], "ex": [[1.0, 0.0], [0.0, 0.0]], "ey": [[0.0, 1.0], [0.0, 0.0]] },
                    "window": { "x0": -3.0, "x1": 3.0, "y0": -3.0, "y1": 3.0 } }),
        ),
    };
    json!({ "family": family, "output": "out", "params": params })
}
