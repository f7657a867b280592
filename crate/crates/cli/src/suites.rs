//! The checks behind each command.

use std::path::{Path, PathBuf};

use gframe_core::coherent::{
    eigen_residual, quadrature_thresholds, BiCoherentSystem, FockStructure, DEFAULT_DEFECT_MAX,
};
use gframe_core::duality::{dual_norm_decomposition, gram_gap, AlternateDualRecipe};
use gframe_core::format::Metadata;
use gframe_core::frame::dual_pair_deviation;
use gframe_core::linalg::{identity_deviation, random_unit_vector};
use gframe_core::perturbation::{closeness_ratio, gavruta_check, one_sided_m, optimal_m, SamplingOptions};
use gframe_core::{
    serialize_spec, Check, CMatrix, CVector, Complex64, Error, GFrame, Tolerances,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::report::{Provenance, Report};
use crate::CliError;

/// Operator identities are checked at this multiple of `tol.eq`.
pub const IDENTITY_FACTOR: f64 = 10.0;
/// Bounds of derived frames go through a second eigendecomposition.
pub const BOUNDS_FACTOR: f64 = 100.0;
/// The truncated uncertainty product converges to 1/2 without a closed-form
/// correction, so it is held to a fixed looser tolerance.
pub const UNCERTAINTY_TOL: f64 = 1e-6;
/// Dense ladder matrices are only formed up to this Fock dimension.
pub const LADDER_MATRIX_LIMIT: usize = 400;

#[derive(Debug, Clone)]
pub struct Options {
    pub tol: Tolerances,
    pub seed: u64,
    pub samples: usize,
}

impl Options {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn provenance(&self) -> Provenance {
        Provenance::new(self.seed, self.samples, self.tol)
    }
}

/// A parsed input file.
#[derive(Debug, Clone)]
pub struct Subject {
    pub name: String,
    pub frame: GFrame,
}

pub fn load(path: &Path) -> Result<Subject, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let doc = gframe_core::format::parse_document(&text)?;
    let frame = doc.to_frame()?;
    let name = doc.name().map(str::to_string).unwrap_or_else(|| path.display().to_string());
    Ok(Subject { name, frame })
}

fn emit(path: &Path, frame: &GFrame, name: String) -> Result<(), CliError> {
    let meta = Metadata {
        name: Some(name),
        description: None,
    };
    std::fs::write(path, serialize_spec(frame, Some(meta))).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn base_report(subject: &Subject, command: &str, opts: &Options) -> Report {
    Report {
        subject: subject.name.clone(),
        command: command.to_string(),
        classification: subject.frame.classify(&opts.tol),
        bounds: subject.frame.bounds(&opts.tol),
        checks: Vec::new(),
        details: serde_json::Map::new(),
        passed: true,
        provenance: opts.provenance(),
    }
}

fn require_frame(frame: &GFrame, tol: &Tolerances) -> Result<(), Error> {
    let b = frame.bounds(tol);
    if b.is_frame {
        Ok(())
    } else {
        Err(Error::NotAFrame {
            lower: b.lower,
            upper: b.upper,
        })
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Frame inequality on seeded random unit vectors, plus the resolution of
/// the identity and the bounds of the canonical dual when it exists.
pub fn classify_checks(frame: &GFrame, opts: &Options) -> Result<Vec<Check>, Error> {
    let tol = &opts.tol;
    let b = frame.bounds(tol);
    let mut rng = opts.rng();
    let mut violation: f64 = 0.0;
    for _ in 0..opts.samples {
        let e = frame.energy(&random_unit_vector(frame.hilbert_dim(), &mut rng));
        violation = violation.max(b.lower - e).max(e - b.upper);
    }
    let mut checks = vec![Check::at_most(
        "frame_inequality_sampling",
        violation.max(0.0),
        IDENTITY_FACTOR * tol.eq * b.upper.max(1.0),
    )];
    if b.is_frame {
        let dual = frame.canonical_dual(tol)?;
        checks.extend(resolution_checks(frame, &dual, tol));
        checks.push(dual_bounds_check(frame, &dual, tol));
    }
    Ok(checks)
}

fn resolution_checks(frame: &GFrame, dual: &GFrame, tol: &Tolerances) -> Vec<Check> {
    let t = frame.analysis().matrix;
    let td = dual.analysis().matrix;
    vec![
        Check::at_most(
            "resolution_of_identity",
            identity_deviation(&(t.adjoint() * &td)),
            IDENTITY_FACTOR * tol.eq,
        ),
        Check::at_most(
            "resolution_of_identity_adjoint",
            identity_deviation(&(td.adjoint() * &t)),
            IDENTITY_FACTOR * tol.eq,
        ),
    ]
}

fn dual_bounds_check(frame: &GFrame, dual: &GFrame, tol: &Tolerances) -> Check {
    let b = frame.bounds(tol);
    let d = dual.bounds(tol);
    let gap = relative_gap(d.lower, 1.0 / b.upper).max(relative_gap(d.upper, 1.0 / b.lower));
    Check::at_most("canonical_dual_bounds", gap, BOUNDS_FACTOR * tol.eq)
}

fn max_block_norm(frame: &GFrame) -> f64 {
    frame.blocks().iter().map(|b| b.norm()).fold(0.0, f64::max)
}

pub fn classify(subject: &Subject, opts: &Options) -> Result<Report, CliError> {
    let mut r = base_report(subject, "classify", opts);
    r.checks = classify_checks(&subject.frame, opts)?;
    let f = &subject.frame;
    r.detail("hilbert_dim", f.hilbert_dim());
    r.detail("block_dims", f.block_dims());
    r.detail("orthonormality_defect", f.orthonormality_defect());
    Ok(r.finish())
}

pub fn dual_checks(frame: &GFrame, opts: &Options) -> Result<(GFrame, Vec<Check>), Error> {
    let tol = &opts.tol;
    require_frame(frame, tol)?;
    let dual = frame.canonical_dual(tol)?;
    let mut checks = resolution_checks(frame, &dual, tol);
    checks.push(dual_bounds_check(frame, &dual, tol));
    let double = dual.canonical_dual(tol)?;
    checks.push(Check::at_most(
        "double_dual",
        double.block_distance(frame)? / max_block_norm(frame),
        BOUNDS_FACTOR * tol.eq,
    ));
    Ok((dual, checks))
}

pub fn dual(subject: &Subject, emit_path: Option<&PathBuf>, opts: &Options) -> Result<Report, CliError> {
    let mut r = base_report(subject, "dual", opts);
    let (dual, checks) = dual_checks(&subject.frame, opts)?;
    r.checks = checks;
    r.detail("dual_bounds", dual.bounds(&opts.tol));
    if let Some(path) = emit_path {
        emit(path, &dual, format!("canonical dual of {}", subject.name))?;
        let reread = load(path)?;
        r.checks.push(Check::at_most(
            "emitted_dual_pair",
            dual_pair_deviation(&subject.frame, &reread.frame)?,
            opts.tol.eq,
        ));
        r.detail("emitted", path.display().to_string());
    }
    Ok(r.finish())
}

pub fn alt_dual_checks(
    frame: &GFrame,
    probe: Option<&[Complex64]>,
    opts: &Options,
) -> Result<(GFrame, Vec<Check>), Error> {
    let tol = &opts.tol;
    let n = frame.hilbert_dim();
    let probe = match probe {
        Some(p) => CVector::from_column_slice(p),
        None => CVector::from_fn(n, |i, _| if i == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }),
    };
    let recipe = AlternateDualRecipe::new(frame, &probe, opts.seed, tol)?;
    let alt = recipe.dual();
    let canonical = &recipe.canonical_dual;
    let loose = Tolerances::with_eq(IDENTITY_FACTOR * tol.eq);

    let mut rng = opts.rng();
    let t = frame.analysis().matrix;
    let (mut minimality, mut orthogonality): (f64, f64) = (0.0, 0.0);
    for _ in 0..opts.samples {
        let f = random_unit_vector(n, &mut rng);
        let g = random_unit_vector(n, &mut rng);
        let d = dual_norm_decomposition(frame, &alt, &f, &loose)?;
        minimality = minimality.max(d.canonical.sqrt() - d.dual.sqrt());
        let diff = alt.analysis().apply(&f) - canonical.analysis().apply(&f);
        orthogonality = orthogonality.max(diff.dotc(&(&t * g)).norm());
    }
    let checks = vec![
        Check::at_most("alternate_is_dual", dual_pair_deviation(frame, &alt)?, IDENTITY_FACTOR * tol.eq),
        Check::at_least("differs_from_canonical", alt.block_distance(canonical)?, 1e-6),
        Check::at_most("minimality", minimality.max(0.0), tol.eq),
        Check::at_most("range_orthogonality", orthogonality, IDENTITY_FACTOR * tol.eq),
        Check::at_most("gram_identity_canonical", gram_gap(frame, canonical, &alt, &loose)?, IDENTITY_FACTOR * tol.eq),
        Check::at_least("gram_identity_fails_for_alternate", gram_gap(frame, &alt, canonical, &loose)?, 1e-6),
    ];
    Ok((alt, checks))
}

pub fn alt_dual(
    subject: &Subject,
    probe: Option<&[Complex64]>,
    emit_path: Option<&PathBuf>,
    opts: &Options,
) -> Result<Report, CliError> {
    let mut r = base_report(subject, "alt-dual", opts);
    if let Some(p) = probe {
        if p.len() != subject.frame.hilbert_dim() {
            return Err(Error::DimensionMismatch(format!(
                "--g0 has {} entries, expected {}",
                p.len(),
                subject.frame.hilbert_dim()
            ))
            .into());
        }
    }
    let (alt, checks) = alt_dual_checks(&subject.frame, probe, opts)?;
    r.checks = checks;
    if let Some(path) = emit_path {
        emit(path, &alt, format!("alternate dual of {}", subject.name))?;
        r.detail("emitted", path.display().to_string());
    }
    Ok(r.finish())
}

#[derive(Debug, Clone, Copy)]
pub struct PerturbArgs {
    pub m: Option<f64>,
    pub n: f64,
}

pub fn perturb(reference: &Subject, perturbed: &Subject, args: PerturbArgs, opts: &Options) -> Result<Report, CliError> {
    let tol = &opts.tol;
    let (f, g) = (&reference.frame, &perturbed.frame);
    f.ensure_same_shape(g)?;
    let mut r = base_report(reference, "perturb", opts);
    r.subject = format!("{} vs {}", reference.name, perturbed.name);
    r.detail("perturbed_classification", g.classify(tol));
    r.detail("perturbed_bounds", g.bounds(tol));

    if f.bounds(tol).is_frame && g.bounds(tol).is_frame {
        let rep = optimal_m(f, g, tol)?;
        let mut rng = opts.rng();
        let mut sampled: f64 = 0.0;
        for _ in 0..opts.samples {
            sampled = sampled.max(closeness_ratio(f, g, &random_unit_vector(f.hilbert_dim(), &mut rng)));
        }
        let scale = rep.m_opt.max(f64::MIN_POSITIVE);
        r.checks.push(Check::at_most("sampled_ratio_within_m_opt", sampled / scale, 1.0 + 1e-8));
        r.checks.push(Check::at_most(
            "maximizer_attains_m_opt",
            (closeness_ratio(f, g, &rep.maximizer) - rep.m_opt).abs() / scale,
            1e-6,
        ));
        r.checks.push(Check::at_least("lower_bound_guarantee", rep.actual_lower, rep.guaranteed_lower * (1.0 - tol.eq)));
        r.checks.push(Check::at_most("upper_bound_guarantee", rep.actual_upper, rep.guaranteed_upper * (1.0 + tol.eq)));
        r.detail("optimal_m", &rep);
    } else {
        r.detail("optimal_m", "skipped: both families must be g-frames");
    }
    if f.bounds(tol).is_frame {
        match one_sided_m(f, g, tol) {
            Ok(rep) => r.detail("one_sided", rep),
            Err(Error::DegenerateTheta) => r.detail("one_sided", "perturbed frame operator is singular"),
            Err(e) => return Err(e.into()),
        }
    }

    if let Some(m) = args.m {
        let sampling = SamplingOptions {
            samples: opts.samples,
            seed: opts.seed,
        };
        match gavruta_check(f, g, m, args.n, &sampling, tol) {
            Ok(rep) => {
                r.checks.push(Check::at_most("premise", rep.premise_sup, m));
                r.checks.push(Check::at_most("cross_norm_bound", rep.norm_v, rep.norm_v_bound + 1e-9));
                r.checks.push(Check::at_least(
                    "perturbed_lower_bound",
                    rep.theta_lower_actual,
                    rep.theta_lower_guarantee * (1.0 - tol.eq),
                ));
                if let Some(guarantee) = rep.lambda_lower_guarantee {
                    r.checks.push(Check::at_least(
                        "reference_lower_bound",
                        rep.lambda_lower_actual,
                        guarantee * (1.0 - tol.eq),
                    ));
                }
                r.detail("gavruta", &rep);
            }
            Err(Error::PremiseNotVerifiable { excess, witness }) => {
                r.checks.push(Check::at_most("premise", m + excess, m));
                r.detail("premise_witness", witness);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(r.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherentCheck {
    Identity,
    Eigen,
    Uncertainty,
    Bicoherent,
    All,
}

#[derive(Debug, Clone, Copy)]
pub struct CoherentArgs {
    pub z: Complex64,
    pub w: Complex64,
    pub levels: Option<usize>,
    pub blocks: Option<usize>,
    pub check: CoherentCheck,
    pub radial: Option<usize>,
    pub angular: Option<usize>,
}

#[derive(Serialize)]
struct StateSummary {
    z: [f64; 2],
    w: [f64; 2],
    truncation_defect: f64,
    levels: usize,
    blocks: usize,
}

pub fn coherent_checks(frame: &GFrame, args: &CoherentArgs, opts: &Options) -> Result<(Vec<Check>, serde_json::Value), Error> {
    let tol = &opts.tol;
    let class = frame.classify(tol);
    let wants = |c: CoherentCheck| args.check == c || args.check == CoherentCheck::All;
    let dims = frame.block_dims();
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(Error::NonUniformBlocks);
    }
    let (k, l) = (dims[0], dims.len());
    if args.levels.is_some_and(|v| v != k) || args.blocks.is_some_and(|v| v != l) {
        return Err(Error::DimensionMismatch(format!(
            "file has K = {k} rows per block and L = {l} blocks"
        )));
    }
    // The Fock basis comes from the g-on basis itself or, for a g-Riesz
    // input, from its Parseval transform.
    let gon = if class.is_on_basis || frame.is_gon_basis(tol) {
        frame.clone()
    } else if class.is_riesz_basis {
        frame.parseval_transform(tol)?
    } else {
        return Err(Error::NotRieszBasis);
    };
    let fock = FockStructure::new(&gon, tol)?;
    let (min_radial, min_angular) = quadrature_thresholds(k, l);
    let radial = args.radial.unwrap_or(min_radial);
    let angular = args.angular.unwrap_or(min_angular);
    let (z, w) = (args.z, args.w);

    let mut checks = Vec::new();
    if wants(CoherentCheck::Identity) {
        let q = fock.quadrature_identity(radial, angular)?;
        checks.push(Check::at_most(
            "quadrature_identity",
            (q - CMatrix::identity(fock.dim(), fock.dim())).norm(),
            tol.eq,
        ));
    }
    let mut summary = None;
    if wants(CoherentCheck::Eigen) {
        let st = fock.coherent_state(z, w, DEFAULT_DEFECT_MAX)?;
        let phi = &st.vector;
        checks.push(Check::at_most("state_norm", (phi.norm() - 1.0).abs(), tol.eq));
        checks.push(Check::at_most(
            "eigen_a",
            (fock.ladder_action(phi, true, false) - phi * z).norm(),
            tol.eq,
        ));
        checks.push(Check::at_most(
            "eigen_b",
            (fock.ladder_action(phi, false, false) - phi * w).norm(),
            tol.eq,
        ));
        if fock.dim() <= LADDER_MATRIX_LIMIT {
            let ops = fock.ladder_ops();
            checks.push(Check::at_most("commutator_ab", ops.commutator_norm(), IDENTITY_FACTOR * tol.eq));
            checks.push(Check::at_most("ccr_interior", fock.ccr_interior_defect(&ops), IDENTITY_FACTOR * tol.eq));
        }
        summary = Some(StateSummary {
            z: [z.re, z.im],
            w: [w.re, w.im],
            truncation_defect: st.truncation_defect,
            levels: k,
            blocks: l,
        });
    }
    if wants(CoherentCheck::Uncertainty) {
        let (ua, ub) = fock.uncertainty_product(z, w)?;
        checks.push(Check::at_most("uncertainty_a", (ua - 0.5).abs(), UNCERTAINTY_TOL));
        checks.push(Check::at_most("uncertainty_b", (ub - 0.5).abs(), UNCERTAINTY_TOL));
    }
    if wants(CoherentCheck::Bicoherent) {
        let sys = if class.is_on_basis || frame.is_gon_basis(tol) {
            BiCoherentSystem::with_factorization(frame, &CMatrix::identity(fock.dim(), fock.dim()), tol)?
        } else {
            BiCoherentSystem::new(frame, tol)?
        };
        checks.extend(sys.verify(z, w, radial, angular, tol)?.into_iter().map(|mut c| {
            c.name = format!("bicoherent.{}", c.name);
            c
        }));
    }
    let details = serde_json::json!({
        "levels": k,
        "blocks": l,
        "radial_nodes": radial,
        "angular_nodes": angular,
        "predicted_eigen_residual": [eigen_residual(z, k), eigen_residual(w, l)],
        "state": summary,
    });
    Ok((checks, details))
}

pub fn coherent(subject: &Subject, args: &CoherentArgs, opts: &Options) -> Result<Report, CliError> {
    let mut r = base_report(subject, "coherent", opts);
    let (checks, details) = coherent_checks(&subject.frame, args, opts)?;
    r.checks = checks;
    r.detail("coherent", details);
    Ok(r.finish())
}

/// Every suite that applies to the input.
pub fn all(subject: &Subject, args: &CoherentArgs, opts: &Options) -> Result<Report, CliError> {
    let mut r = base_report(subject, "all", opts);
    let f = &subject.frame;
    r.checks = classify_checks(f, opts)?;
    let class = r.classification;
    let mut skipped = Vec::new();
    if class.is_frame {
        r.extend_prefixed("dual", dual_checks(f, opts)?.1);
    } else {
        skipped.push("dual");
    }
    if class.is_frame && !class.is_riesz_basis {
        r.extend_prefixed("alt_dual", alt_dual_checks(f, None, opts)?.1);
    } else {
        skipped.push("alt-dual");
    }
    let dims = f.block_dims();
    if class.is_riesz_basis && dims.iter().all(|&d| d == dims[0]) {
        let (checks, details) = coherent_checks(f, args, opts)?;
        r.extend_prefixed("coherent", checks);
        r.detail("coherent", details);
    } else {
        skipped.push("coherent");
    }
    r.detail("skipped", skipped);
    Ok(r.finish())
}
