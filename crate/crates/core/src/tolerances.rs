//! Every numerical threshold used by the solvers, in one place.
//!
//! Names are module-qualified (`cycles.newton_residual`, …) both in the JSON
//! config block and in the CLI help table produced by [`Tolerances::describe`].

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsTol {
    /// Relative distance below which two marked critical points collide.
    pub collision: f64,
}

impl Default for DynamicsTol {
    fn default() -> Self {
        DynamicsTol { collision: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialTol {
    pub burn_in: usize,
    pub branch_retries: usize,
    /// Modulus past which the Green telescoping formula is applied.
    pub green_bailout: f64,
    /// Iteration depth for the Green values in the Lyapunov cross-check.
    pub crosscheck_depth: usize,
}

impl Default for PotentialTol {
    fn default() -> Self {
        PotentialTol {
            burn_in: 50,
            branch_retries: 8,
            green_bailout: 1e40,
            crosscheck_depth: 4000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurrentsTol {
    /// Derivative growth that certifies activity.
    pub active_derivative: f64,
    /// Derivative bound required for a passive verdict.
    pub passive_derivative: f64,
    /// Negative densities below `-negative_clamp · max` are clamped and counted.
    pub negative_clamp: f64,
    /// Rings and spokes of the polar probe used by the activity test.
    pub probe_rings: usize,
    pub probe_spokes: usize,
    /// Largest chordal change of `f^n(c)` per grid cell for a depth to count as resolved.
    pub max_cell_change: f64,
}

impl Default for CurrentsTol {
    fn default() -> Self {
        CurrentsTol {
            active_derivative: 1e8,
            passive_derivative: 1e3,
            negative_clamp: 1e-6,
            probe_rings: 4,
            probe_spokes: 16,
            max_cell_change: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyclesTol {
    pub newton_residual: f64,
    pub max_newton: usize,
    pub max_backtracks: usize,
    /// Periodicity residual accepted for a cycle point.
    pub cycle_residual: f64,
    pub superattracting: f64,
    /// Half-width of the neutral band around `|m| = 1`.
    pub neutral_band: f64,
    pub separation: f64,
    pub rank_rel: f64,
    pub dedup_radius: f64,
    /// Largest `d^n` accepted by `periodic_points`.
    pub max_degree: u64,
    pub continuation_step_min: f64,
}

impl Default for CyclesTol {
    fn default() -> Self {
        CyclesTol {
            newton_residual: 1e-10,
            max_newton: 200,
            max_backtracks: 40,
            cycle_residual: 1e-8,
            superattracting: 1e-8,
            neutral_band: 1e-8,
            separation: 1e-6,
            rank_rel: 1e-6,
            dedup_radius: 1e-8,
            max_degree: 4096,
            continuation_step_min: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MisiurewiczTol {
    pub residual: f64,
    pub repelling_margin: f64,
    /// `|det| > transversality · (row-norm product)` certifies transversality.
    pub transversality: f64,
    pub dedup: f64,
}

impl Default for MisiurewiczTol {
    fn default() -> Self {
        MisiurewiczTol {
            residual: 1e-10,
            repelling_margin: 1e-8,
            transversality: 1e-8,
            dedup: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormTol {
    /// Disk radius R of the quadratic-like model.
    pub radius: f64,
    pub delta_emp: f64,
    /// Half-width of the model parameter grid.
    pub r_param: f64,
    pub straighten: f64,
    pub center_multiplier: f64,
    pub chart_degenerate: f64,
    pub embed_residual: f64,
    pub max_sweeps: usize,
    /// Samples per axis of the distortion estimate (the sample is this^4).
    pub h_samples: usize,
}

impl Default for RenormTol {
    fn default() -> Self {
        RenormTol {
            radius: 20.0,
            delta_emp: 0.25,
            r_param: 2.5,
            straighten: 1e-3,
            center_multiplier: 1e-6,
            chart_degenerate: 1e-14,
            embed_residual: 1e-9,
            max_sweeps: 100,
            h_samples: 32,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub dynamics: DynamicsTol,
    pub potential: PotentialTol,
    pub currents: CurrentsTol,
    pub cycles: CyclesTol,
    pub misiurewicz: MisiurewiczTol,
    pub renorm: RenormTol,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToleranceDoc {
    pub name: String,
    pub default: String,
    pub module: &'static str,
}

impl Tolerances {
    /// Flat `(name, default, consuming module)` table of every tolerance.
    pub fn describe() -> Vec<ToleranceDoc> {
        let v = serde_json::to_value(Tolerances::default()).expect("tolerances serialize");
        let mut out = Vec::new();
        if let serde_json::Value::Object(groups) = v {
            for (group, fields) in groups {
                let module = match group.as_str() {
                    "dynamics" => "dynamics-core",
                    "potential" => "potential",
                    "currents" => "currents",
                    "cycles" => "cycles",
                    "misiurewicz" => "misiurewicz",
                    _ => "renorm",
                };
                if let serde_json::Value::Object(fields) = fields {
                    for (name, value) in fields {
                        out.push(ToleranceDoc {
                            name: format!("{group}.{name}"),
                            default: value.to_string(),
                            module,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn help_table() -> String {
        let mut s = String::from("Tolerances (config key = default, consuming module):\n");
        for d in Self::describe() {
            s.push_str(&format!("  {:<34} = {:<10} [{}]\n", d.name, d.default, d.module));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<Tolerances>(r#"{"cycles": {"newton_residual": 1e-9}}"#).is_ok());
        assert!(serde_json::from_str::<Tolerances>(r#"{"cycles": {"bogus": 1}}"#).is_err());
        assert!(serde_json::from_str::<Tolerances>(r#"{"nope": {}}"#).is_err());
    }

    #[test]
    fn describe_lists_every_field() {
        let docs = Tolerances::describe();
        assert!(docs.iter().any(|d| d.name == "renorm.radius" && d.default == "20.0"));
        assert!(docs.iter().any(|d| d.name == "potential.burn_in" && d.default == "50"));
        assert!(docs.len() > 30);
    }
}
