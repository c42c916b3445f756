//! Command dispatch: each command turns a parsed JSON document into a JSON
//! report plus a verdict.

use nhomog_core::calculus::{calc_polynomial, calc_table, OrbitTable};
use nhomog_core::haar::{equivariant_average, mc_radius, twirl_exact, McConfig, MIN_SAMPLES};
use nhomog_core::matrix::{op_norm, Tolerance};
use nhomog_core::nspace::{
    classify_matrix_rep, ideal_from_generators, integrate_n_measure, EquivariantElement, FiniteNSpace, NMeasure,
    RepClass,
};
use nhomog_core::sw_engine::{
    check_hypotheses, closure_star_subalgebra, delta2_subspace, density_check, stack, unit_in_closure, Separation,
};
use nhomog_core::decomposition::verdict_of;
use nhomog_core::{decompose, Decomposition, Error, StarPolynomial};
use serde_json::{json, Map, Value};

use crate::io::{self, InputError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Spectrum,
    Calc,
    SwCheck,
    Haar,
    Nspace,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Spectrum => "spectrum",
            Command::Calc => "calc",
            Command::SwCheck => "sw-check",
            Command::Haar => "haar",
            Command::Nspace => "nspace",
        }
    }

    fn stochastic(self) -> bool {
        matches!(self, Command::Haar)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: Option<usize>,
    pub tol: Tolerance,
    pub seed: u64,
    pub samples: usize,
}

/// A finished run: the report and whether the verdict was positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub verdict: bool,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.verdict {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) | Failure::Invalid(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalFailure(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

pub fn run(cfg: &RunConfig, doc: &Value) -> Result<Outcome, Failure> {
    if cfg.n == Some(0) {
        return Err(Failure::Invalid("n must be at least 1".into()));
    }
    cfg.tol.validate()?;
    let mut outcome = match cfg.command {
        Command::Analyze => analyze(cfg, doc)?,
        Command::Spectrum => spectrum(cfg, doc)?,
        Command::Calc => calc(cfg, doc)?,
        Command::SwCheck => sw_check(cfg, doc)?,
        Command::Haar => haar(cfg, doc)?,
        Command::Nspace => nspace(cfg, doc)?,
    };
    let report = outcome.report.as_object_mut().expect("reports are objects");
    report.insert("command".into(), json!(cfg.command.name()));
    report.insert(
        "tolerance".into(),
        json!({"rank_cut": cfg.tol.rank_cut, "psd_slack": cfg.tol.psd_slack, "eq_tol": cfg.tol.eq_tol}),
    );
    report.insert("seed".into(), json!(cfg.seed));
    if cfg.command.stochastic() {
        report.insert("samples".into(), json!(cfg.samples));
    }
    Ok(outcome)
}

/// `n` from the flag, else from the document.
fn requested_n(cfg: &RunConfig, doc: &Value) -> Result<Option<usize>, Failure> {
    let from_doc = io::usize_field(doc, "n")?;
    match (cfg.n, from_doc) {
        (Some(a), Some(b)) if a != b => Err(Failure::Invalid(format!("--n {a} disagrees with \"n\": {b} in the input"))),
        (Some(0), _) | (None, Some(0)) => Err(Failure::Invalid("n must be at least 1".into())),
        (a, b) => Ok(a.or(b)),
    }
}

/// Decomposes the input tuple and fixes `n`: the requested value, else the
/// common block dimension.
fn decompose_input(cfg: &RunConfig, doc: &Value) -> Result<(Decomposition, Option<usize>), Failure> {
    let t = io::tuple(io::field(doc, "generators")?, "generators")?;
    let n = requested_n(cfg, doc)?;
    let dec = decompose(&t, &cfg.tol, cfg.seed)?;
    if n.is_some() {
        return Ok((dec, n));
    }
    let mut dims = dec.class_dims();
    dims.sort_unstable();
    dims.dedup();
    match dims.as_slice() {
        [] => Err(Failure::Invalid("the tuple is zero; pass --n".into())),
        [d] => Ok((dec, Some(*d))),
        _ => Ok((dec, None)),
    }
}

fn classes_json(dec: &Decomposition) -> Value {
    Value::Array(
        dec.classes
            .iter()
            .zip(&dec.multiplicities)
            .map(|(c, m)| json!({"dim": c.d, "multiplicity": m, "generators": io::tuple_json(c)}))
            .collect(),
    )
}

fn mixed_reason(dec: &Decomposition) -> String {
    format!("irreducible blocks of dimensions {:?}", dec.block_dims())
}

fn analyze(cfg: &RunConfig, doc: &Value) -> Result<Outcome, Failure> {
    let (dec, n) = decompose_input(cfg, doc)?;
    let (verdict, reason) = match n {
        Some(n) => {
            let r = verdict_of(dec.clone(), n);
            (r.is_n_homogeneous, r.reason)
        }
        None => (false, Some(mixed_reason(&dec))),
    };
    let mut report = json!({
        "is_n_homogeneous": verdict,
        "n": n,
        "classes": classes_json(&dec),
        "zero_dim": dec.zero_dim(),
        "block_dims": dec.block_dims(),
    });
    if let Some(r) = &reason {
        report["reason"] = json!(r);
    }
    let summary = match (verdict, n) {
        (true, Some(n)) => format!(
            "{n}-homogeneous: {} class(es), multiplicities {:?}, zero part of dimension {}",
            dec.classes.len(),
            dec.multiplicities,
            dec.zero_dim()
        ),
        _ => format!("not homogeneous: {}", reason.unwrap_or_default()),
    };
    Ok(Outcome { report, verdict, summary })
}

/// Shared false verdict for commands that need a homogeneous tuple.
fn not_homogeneous(dec: &Decomposition, n: Option<usize>, reason: String) -> Outcome {
    Outcome {
        report: json!({
            "is_n_homogeneous": false,
            "n": n,
            "block_dims": dec.block_dims(),
            "zero_dim": dec.zero_dim(),
            "reason": reason,
        }),
        verdict: false,
        summary: format!("not homogeneous: {reason}"),
    }
}

/// The decomposition when it is homogeneous of the requested size.
fn homogeneous_input(cfg: &RunConfig, doc: &Value) -> Result<Result<(Decomposition, usize), Outcome>, Failure> {
    let (dec, n) = decompose_input(cfg, doc)?;
    let Some(n) = n else {
        let reason = mixed_reason(&dec);
        return Ok(Err(not_homogeneous(&dec, None, reason)));
    };
    let r = verdict_of(dec, n);
    if !r.is_n_homogeneous {
        let reason = r.reason.clone().unwrap_or_default();
        return Ok(Err(not_homogeneous(&r.decomposition, Some(n), reason)));
    }
    Ok(Ok((r.decomposition, n)))
}

fn spectrum(cfg: &RunConfig, doc: &Value) -> Result<Outcome, Failure> {
    let (dec, n) = match homogeneous_input(cfg, doc)? {
        Ok(x) => x,
        Err(outcome) => return Ok(outcome),
    };
    let points: Vec<Value> = dec
        .classes
        .iter()
        .zip(&dec.multiplicities)
        .map(|(c, m)| json!({"generators": io::tuple_json(c), "multiplicity": m}))
        .collect();
    let summary = format!(
        "{}-spectrum with {} point(s){}",
        n,
        points.len(),
        if dec.zero_dim() > 0 { ", zero representation in the closure" } else { "" }
    );
    Ok(Outcome {
        report: json!({"n": n, "points": points, "zero_in_closure": dec.zero_dim() > 0}),
        verdict: true,
        summary,
    })
}

fn calc(cfg: &RunConfig, doc: &Value) -> Result<Outcome, Failure> {
    let (dec, n) = match homogeneous_input(cfg, doc)? {
        Ok(x) => x,
        Err(outcome) => return Ok(outcome),
    };
    let (result, input) = match (doc.get("polynomial"), doc.get("table")) {
        (Some(p), None) => {
            let text = p.as_str().ok_or_else(|| InputError::Schema {
                field: "polynomial".into(),
                message: "expected a string such as \"z1*z2' + 2*z1\"".into(),
            })?;
            let poly = StarPolynomial::parse(text)?;
            (calc_polynomial(&poly, &dec)?, json!({"polynomial": poly.to_string()}))
        }
        (None, Some(t)) => {
            let values = io::matrices(t, "table")?;
            let table = OrbitTable::new(&dec, values)?;
            (calc_table(&table, &dec)?, json!({"table_entries": table.values.len()}))
        }
        _ => {
            return Err(Failure::Input(InputError::Schema {
                field: "polynomial|table".into(),
                message: "give exactly one of \"polynomial\" or \"table\"".into(),
            }))
        }
    };
    let norm = op_norm(&result);
    Ok(Outcome {
        report: json!({"n": n, "input": input, "result": io::matrix_json(&result), "norm": norm}),
        verdict: true,
        summary: format!("result of size {0}x{0}, operator norm {norm:.6e}", result.nrows()),
    })
}

fn haar(cfg: &RunConfig, doc: &Value) -> Result<Outcome, Failure> {
    let a = io::matrix(io::field(doc, "matrix")?, "matrix")?;
    if !a.is_square() {
        return Err(Failure::Invalid(format!("matrix is {}x{}, expected square", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    if let Some(req) = requested_n(cfg, doc)? {
        if req != n {
            return Err(Failure::Invalid(format!("n = {req} but the matrix is {n}x{n}")));
        }
    }
    if cfg.samples < MIN_SAMPLES {
        return Err(Error::McBudgetTooSmall { samples: cfg.samples, minimum: MIN_SAMPLES }.into());
    }
    let mc = McConfig::new(cfg.samples, cfg.seed);
    let space = FiniteNSpace::new(n, 1);
    let estimate = equivariant_average(|_| a.clone(), &space, 0, mc)?;
    let exact = twirl_exact(&a)?;
    let error = op_norm(&(&estimate - &exact));
    let radius = mc_radius(op_norm(&a), cfg.samples);
    let within = error <= radius;
    Ok(Outcome {
        report: json!({
            "n": n,
            "exact": io::matrix_json(&exact),
            "estimate": io::matrix_json(&estimate),
            "error": error,
            "radius": radius,
            "within_radius": within,
        }),
        verdict: within,
        summary: format!("twirl error {error:.3e} against radius {radius:.3e}"),
    })
}

fn nspace(cfg: &RunConfig, doc: &Value) -> Result<Outcome, Failure> {
    let n = requested_n(cfg, doc)?.ok_or_else(|| Failure::Invalid("n is required (flag or \"n\" field)".into()))?;
    let orbits = io::usize_field(doc, "orbits")?.ok_or_else(|| InputError::Schema {
        field: "orbits".into(),
        message: "missing field".into(),
    })?;
    let space = FiniteNSpace::new(n, orbits);
    let element = |v: &Value, path: &str| -> Result<EquivariantElement, Failure> {
        let values = io::square_matrices(io::field(v, "values")?, &format!("{path}.values"), Some(n))?;
        Ok(EquivariantElement::new(space, values)?)
    };
    let gens_json = io::field(doc, "generators")?
        .as_array()
        .ok_or_else(|| InputError::Schema { field: "generators".into(), message: "expected an array".into() })?;
    let gens = gens_json
        .iter()
        .enumerate()
        .map(|(i, g)| element(g, &format!("generators[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;

    let ideal = ideal_from_generators(&gens, space, &cfg.tol)?;
    let mut report = Map::new();
    report.insert("n".into(), json!(n));
    report.insert("orbits".into(), json!(orbits));
    report.insert(
        "ideal".into(),
        json!({
            "dim": ideal.ideal_basis.dim(),
            "vanishing_set": ideal.vanishing_set,
            "quotient_dim": ideal.vanishing_set.len() * n * n,
        }),
    );
    let mut summary = format!(
        "ideal of dimension {} vanishing on orbits {:?}",
        ideal.ideal_basis.dim(),
        ideal.vanishing_set
    );

    if let Some(m) = doc.get("measure") {
        let pairing = io::square_matrices(io::field(m, "pairing")?, "measure.pairing", Some(n))?;
        if pairing.len() != orbits {
            return Err(Failure::Invalid(format!("measure has {} pairing matrices for {orbits} orbits", pairing.len())));
        }
        let mu = NMeasure { space, pairing };
        let integrals = gens
            .iter()
            .map(|g| Ok(io::complex_json(integrate_n_measure(g, &mu)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        report.insert("integrals".into(), Value::Array(integrals));
    }

    if let Some(r) = doc.get("representation") {
        let images = io::square_matrices(io::field(r, "images")?, "representation.images", None)?;
        let class = match classify_matrix_rep(&images, space, &cfg.tol) {
            Ok(c) => c,
            Err(Error::NotAStarHom { residual }) => {
                report.insert("representation".into(), json!({"kind": "not_a_star_hom", "residual": residual}));
                return Ok(Outcome {
                    report: Value::Object(report),
                    verdict: false,
                    summary: format!("{summary}; representation is not a *-homomorphism"),
                });
            }
            Err(e) => return Err(e.into()),
        };
        let rep = match class {
            RepClass::Zero => json!({"kind": "zero"}),
            RepClass::Point(p) => {
                summary.push_str(&format!("; representation is evaluation at orbit {}", p.orbit));
                json!({"kind": "point", "orbit": p.orbit, "unitary": io::matrix_json(&p.u)})
            }
        };
        report.insert("representation".into(), rep);
    }
    Ok(Outcome { report: Value::Object(report), verdict: true, summary })
}

fn separation_json(v: &Separation) -> (&'static str, Option<f64>) {
    match v {
        Separation::CertifiedTrue { distance, .. } => ("certified_true", Some(*distance)),
        Separation::CertifiedFalse => ("certified_false", None),
        Separation::NotFound => ("not_found", None),
    }
}

fn sw_check(cfg: &RunConfig, doc: &Value) -> Result<Outcome, Failure> {
    let points = io::usize_field(doc, "points")?
        .ok_or_else(|| InputError::Schema { field: "points".into(), message: "missing field".into() })?;
    let n = requested_n(cfg, doc)?.ok_or_else(|| Failure::Invalid("n is required (flag or \"n\" field)".into()))?;
    if points == 0 {
        return Err(Failure::Invalid("points must be at least 1".into()));
    }
    let gens_json = io::field(doc, "generators")?
        .as_array()
        .ok_or_else(|| InputError::Schema { field: "generators".into(), message: "expected an array".into() })?;
    let mut gens = Vec::with_capacity(gens_json.len());
    for (i, g) in gens_json.iter().enumerate() {
        let path = format!("generators[{i}]");
        let values = io::square_matrices(g, &path, Some(n))?;
        if values.len() != points {
            return Err(Failure::Input(InputError::Schema {
                field: path,
                message: format!("{} values for {points} points", values.len()),
            }));
        }
        gens.push(stack(&values));
    }
    let e = closure_star_subalgebra(points, n, &gens, &cfg.tol)?;
    let density = density_check(&e, &cfg.tol, cfg.seed)?;
    let delta2 = delta2_subspace(&e, &cfg.tol)?;
    let delta2_equal = delta2.same_subspace(&e.basis, &cfg.tol);
    let unit = unit_in_closure(&e, &cfg.tol)?;
    let hyp = check_hypotheses(&e, &cfg.tol, cfg.seed)?;
    let separation: Vec<Value> = density
        .separation
        .iter()
        .map(|p| {
            let (verdict, distance) = separation_json(&p.verdict);
            json!({"x": p.x, "y": p.y, "verdict": verdict, "distance": distance})
        })
        .collect();
    if density.agrees() == Some(false) {
        return Err(Failure::Numerical(format!(
            "density flag {} contradicts the separation/fullness criterion",
            density.dense
        )));
    }
    if hyp.pairs_ok && !delta2_equal {
        return Err(Failure::Numerical(format!(
            "hypotheses hold but Delta_2 has dimension {} against {}",
            delta2.dim(),
            e.dim()
        )));
    }
    let report = json!({
        "points": points,
        "n": n,
        "dim": density.dim,
        "full_dim": density.full_dim,
        "dense": density.dense,
        "fullness_per_point": density.fullness_per_point,
        "separation": separation,
        "criterion": density.criterion,
        "criterion_agrees": density.agrees(),
        "delta2_dim": delta2.dim(),
        "delta2_equals_span": delta2_equal,
        "unit_in_closure": unit.contains_unit,
        "hypotheses": {
            "pairs_ok": hyp.pairs_ok,
            "failing_pair": hyp.failing_pair.map(|(x, y)| [x, y]),
            "classes": hyp.classes,
        },
    });
    let summary = format!(
        "dim E = {} of {}; {}; Delta_2 dimension {}",
        density.dim,
        density.full_dim,
        if density.dense { "dense" } else { "not dense" },
        delta2.dim()
    );
    Ok(Outcome { report, verdict: density.dense, summary })
}
