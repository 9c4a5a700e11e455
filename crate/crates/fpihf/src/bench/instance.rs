//! Constrained TV least-squares instances: seeded generation, objective
//! evaluation and a self-describing text file format.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bench::BenchError;
use crate::opcore::{discrete_gradient, DenseMatrix, OpError, Vector};

/// Feasibility slack: a point further outside the box than this is
/// treated as infeasible when flagging objective values.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// One instance of the box-constrained TV least-squares problem
///
/// ```text
/// minimize  α₁/2 ‖A x − z‖² + α₂ ‖∇x‖₁   over  lower ≤ x ≤ upper
/// ```
///
/// with `A ∈ ℝ^{K×N}`, `z ∈ ℝᴷ` and `∇` the forward-difference gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    /// Measurement matrix, `K × N`, entries in `[0, κ]`.
    pub a: DenseMatrix,
    /// Measurements, length `K`.
    pub z: Vector,
    /// Lower box bounds, length `N`, entries in `[−1.5, 0]`.
    pub lower: Vector,
    /// Upper box bounds, length `N`, entries in `[0, 1.5]`.
    pub upper: Vector,
    /// Weight of the quadratic data term.
    pub alpha1: f64,
    /// Weight of the total-variation term.
    pub alpha2: f64,
    /// Scale of the uniform entries of `A`.
    pub kappa: f64,
    /// Seed the instance was generated from (kept for provenance).
    pub seed: u64,
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn k(&self) -> usize {
        self.a.nrows()
    }
}

/// Objective value at a point, together with its distance to the box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    /// `α₁/2 ‖Ax − z‖² + α₂ ‖∇x‖₁`, ignoring the box.
    pub value: f64,
    /// Largest componentwise violation of the box constraints.
    pub box_violation: f64,
}

impl Objective {
    pub fn is_feasible(&self) -> bool {
        self.box_violation <= FEASIBILITY_TOL
    }

    /// The value with the box folded in: `+∞` when the point sits outside
    /// the box by more than the feasibility slack.
    pub fn flagged(&self) -> f64 {
        if self.is_feasible() {
            self.value
        } else {
            f64::INFINITY
        }
    }
}

/// Generates an instance from a seed. The pseudo-random stream is a
/// fixed-seed ChaCha8 generator and the draw order is part of the
/// format: first the entries of `A` row by row (uniform on `[0, κ]`),
/// then `z` (standard normal), then the lower bounds (`−1.5·uniform`),
/// then the upper bounds (`1.5·uniform`). Two calls with equal arguments
/// produce bitwise-identical instances on every platform.
///
/// Because `κ` multiplies the uniform draws after sampling, instances
/// sharing a seed but differing in `κ` have proportional matrices.
pub fn generate_instance(
    n: usize,
    k: usize,
    kappa: f64,
    alpha1: f64,
    alpha2: f64,
    seed: u64,
) -> Result<ProblemInstance, OpError> {
    if n < 2 {
        return Err(OpError::Invalid(format!(
            "instance needs n >= 2 for the discrete gradient, got {n}"
        )));
    }
    if k == 0 {
        return Err(OpError::Invalid("instance needs k >= 1".into()));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(OpError::Invalid(format!("kappa must be positive and finite, got {kappa}")));
    }
    if !(alpha1 > 0.0) || !alpha1.is_finite() || !(alpha2 >= 0.0) || !alpha2.is_finite() {
        return Err(OpError::Invalid(format!(
            "weights must be finite with alpha1 > 0 and alpha2 >= 0, got {alpha1}, {alpha2}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DenseMatrix::zeros(k, n);
    for i in 0..k {
        for j in 0..n {
            a[(i, j)] = kappa * rng.gen::<f64>();
        }
    }
    let z = Vector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let lower = Vector::from_fn(n, |_, _| -1.5 * rng.gen::<f64>());
    let upper = Vector::from_fn(n, |_, _| 1.5 * rng.gen::<f64>());
    Ok(ProblemInstance { a, z, lower, upper, alpha1, alpha2, kappa, seed })
}

/// Evaluates the objective and the box violation at `x`.
pub fn objective(instance: &ProblemInstance, x: &Vector) -> Result<Objective, OpError> {
    if x.len() != instance.n() {
        return Err(OpError::DimensionMismatch { expected: instance.n(), found: x.len() });
    }
    let residual = &instance.a * x - &instance.z;
    let tv = discrete_gradient(x)?.iter().map(|g| g.abs()).sum::<f64>();
    let value = 0.5 * instance.alpha1 * residual.norm_squared() + instance.alpha2 * tv;
    let mut box_violation: f64 = 0.0;
    for i in 0..x.len() {
        box_violation = box_violation
            .max(instance.lower[i] - x[i])
            .max(x[i] - instance.upper[i]);
    }
    Ok(Objective { value, box_violation })
}

/// Serializes an instance to the text container format:
///
/// ```text
/// fpihf-instance v1
/// n 4
/// k 2
/// alpha1 5
/// alpha2 0.5
/// kappa 0.2
/// seed 7
/// data explicit
/// a
/// <K rows of N numbers>
/// z
/// <K numbers>
/// lower
/// <N numbers>
/// upper
/// <N numbers>
/// end
/// ```
///
/// Numbers are written in shortest round-tripping decimal form, so
/// `parse_instance(write_instance(p)) == p` exactly. A hand-written file
/// may use `data seeded` (and no blocks) to have the parser regenerate
/// the arrays from the header fields.
pub fn write_instance(instance: &ProblemInstance) -> String {
    let mut out = String::new();
    out.push_str("fpihf-instance v1\n");
    out.push_str(&format!("n {}\n", instance.n()));
    out.push_str(&format!("k {}\n", instance.k()));
    out.push_str(&format!("alpha1 {}\n", instance.alpha1));
    out.push_str(&format!("alpha2 {}\n", instance.alpha2));
    out.push_str(&format!("kappa {}\n", instance.kappa));
    out.push_str(&format!("seed {}\n", instance.seed));
    out.push_str("data explicit\n");
    out.push_str("a\n");
    for i in 0..instance.k() {
        let row: Vec<String> = (0..instance.n()).map(|j| instance.a[(i, j)].to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    for (label, vector) in
        [("z", &instance.z), ("lower", &instance.lower), ("upper", &instance.upper)]
    {
        out.push_str(label);
        out.push('\n');
        let entries: Vec<String> = vector.iter().map(|v| v.to_string()).collect();
        out.push_str(&entries.join(" "));
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

fn parse_number(token: &str, what: &str) -> Result<f64, BenchError> {
    token
        .parse::<f64>()
        .map_err(|_| BenchError::Format(format!("expected a number for {what}, found {token:?}")))
}

/// Parses the text container format produced by [`write_instance`].
pub fn parse_instance(text: &str) -> Result<ProblemInstance, BenchError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some("fpihf-instance v1") => {}
        other => {
            return Err(BenchError::Format(format!(
                "missing header line 'fpihf-instance v1', found {other:?}"
            )))
        }
    }

    let mut n = None;
    let mut k = None;
    let mut alpha1 = None;
    let mut alpha2 = None;
    let mut kappa = None;
    let mut seed = None;
    let data_mode;
    loop {
        let line = lines
            .next()
            .ok_or_else(|| BenchError::Format("file ends before a 'data' line".into()))?;
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let value = parts.next();
        if parts.next().is_some() && key != "data" {
            return Err(BenchError::Format(format!("malformed header line {line:?}")));
        }
        let value = value
            .ok_or_else(|| BenchError::Format(format!("header line {key:?} is missing a value")))?;
        match key {
            "n" => {
                n = Some(value.parse::<usize>().map_err(|_| {
                    BenchError::Format(format!("invalid dimension n = {value:?}"))
                })?)
            }
            "k" => {
                k = Some(value.parse::<usize>().map_err(|_| {
                    BenchError::Format(format!("invalid dimension k = {value:?}"))
                })?)
            }
            "alpha1" => alpha1 = Some(parse_number(value, "alpha1")?),
            "alpha2" => alpha2 = Some(parse_number(value, "alpha2")?),
            "kappa" => kappa = Some(parse_number(value, "kappa")?),
            "seed" => {
                seed = Some(value.parse::<u64>().map_err(|_| {
                    BenchError::Format(format!("invalid seed {value:?}"))
                })?)
            }
            "data" => {
                data_mode = value.to_string();
                break;
            }
            other => return Err(BenchError::Format(format!("unknown header key {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| BenchError::Format("missing field n".into()))?;
    let k = k.ok_or_else(|| BenchError::Format("missing field k".into()))?;
    let alpha1 = alpha1.ok_or_else(|| BenchError::Format("missing field alpha1".into()))?;
    let alpha2 = alpha2.ok_or_else(|| BenchError::Format("missing field alpha2".into()))?;
    let kappa = kappa.ok_or_else(|| BenchError::Format("missing field kappa".into()))?;
    let seed = seed.ok_or_else(|| BenchError::Format("missing field seed".into()))?;

    match data_mode.as_str() {
        "seeded" => {
            expect_end(&mut lines)?;
            Ok(generate_instance(n, k, kappa, alpha1, alpha2, seed)?)
        }
        "explicit" => {
            let mut tokens = lines.flat_map(str::split_whitespace);
            let mut read_block = |label: &str, count: usize| -> Result<Vec<f64>, BenchError> {
                match tokens.next() {
                    Some(l) if l == label => {}
                    other => {
                        return Err(BenchError::Format(format!(
                            "expected block label {label:?}, found {other:?}"
                        )))
                    }
                }
                (0..count)
                    .map(|i| {
                        let token = tokens.next().ok_or_else(|| {
                            BenchError::Format(format!(
                                "block {label:?} ends after {i} of {count} numbers"
                            ))
                        })?;
                        parse_number(token, label)
                    })
                    .collect()
            };
            let a_entries = read_block("a", k * n)?;
            let z_entries = read_block("z", k)?;
            let lower_entries = read_block("lower", n)?;
            let upper_entries = read_block("upper", n)?;
            match tokens.next() {
                Some("end") => {}
                other => {
                    return Err(BenchError::Format(format!(
                        "expected trailing 'end', found {other:?}"
                    )))
                }
            }
            if let Some(extra) = tokens.next() {
                return Err(BenchError::Format(format!("trailing content {extra:?} after 'end'")));
            }
            Ok(ProblemInstance {
                a: DenseMatrix::from_row_slice(k, n, &a_entries),
                z: Vector::from_vec(z_entries),
                lower: Vector::from_vec(lower_entries),
                upper: Vector::from_vec(upper_entries),
                alpha1,
                alpha2,
                kappa,
                seed,
            })
        }
        other => Err(BenchError::Format(format!(
            "data mode must be 'explicit' or 'seeded', found {other:?}"
        ))),
    }
}

fn expect_end<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<(), BenchError> {
    match lines.next() {
        Some("end") => {}
        other => {
            return Err(BenchError::Format(format!("expected trailing 'end', found {other:?}")))
        }
    }
    if let Some(extra) = lines.next() {
        return Err(BenchError::Format(format!("trailing content {extra:?} after 'end'")));
    }
    Ok(())
}

/// Reads an instance file from disk.
pub fn load_instance(path: &std::path::Path) -> Result<ProblemInstance, BenchError> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

/// Writes an instance file to disk.
pub fn save_instance(instance: &ProblemInstance, path: &std::path::Path) -> Result<(), BenchError> {
    std::fs::write(path, write_instance(instance))?;
    Ok(())
}
