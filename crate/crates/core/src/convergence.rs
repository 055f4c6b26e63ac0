//! The convergence harness: run model schedules, compare scaled discrete
//! eigenvalues and eigenspaces against a continuous reference, fit decay
//! rates, and track multiplicity stabilization.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde_json::json;

use crate::cpa::{inner_l2_exact, CpaFunction};
use crate::error::{Error, Result};
use crate::graph::MetrizedGraph;
use crate::laplacian::{eigen_mu, kirchhoff_matrix};
use crate::linalg::{self, SpdSolver};
use crate::measure::{dx_model_measure, voronoi_discretize, MeasureSpec};
use crate::model::build_model;
use crate::reference::{
    circle_spectrum, extrapolate_reference, interval_spectrum, secular_spectrum, Provenance,
    TrigFunction,
};
use crate::scalar::Scalar;

/// How the discrete measure is obtained at each schedule point.
///
/// `DxN` uses the vertex counting measure (the convention of the interval
/// experiments, where eigenfunctions are ordinary eigenvectors of the
/// Kirchhoff matrix). `Voronoi` discretizes the continuous measure by
/// Voronoi cells. The two disagree at finite `N`, so they are never mixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    DxN,
    Voronoi,
}

impl Convention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::DxN => "dxN",
            Convention::Voronoi => "voronoi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dxN" => Ok(Convention::DxN),
            "voronoi" => Ok(Convention::Voronoi),
            other => Err(Error::Config(format!(
                "unknown convention {other:?}; expected dxN or voronoi"
            ))),
        }
    }
}

/// Which measure a run uses.
#[derive(Debug, Clone)]
pub enum MeasureSelection<T> {
    /// Lebesgue measure `dx`.
    Lebesgue,
    /// A custom measure with an identifier for reports.
    Custom { id: String, spec: MeasureSpec<T> },
}

impl<T: Scalar> MeasureSelection<T> {
    pub fn id(&self) -> &str {
        match self {
            MeasureSelection::Lebesgue => "dx",
            MeasureSelection::Custom { id, .. } => id,
        }
    }

    fn resolve(&self, graph: &MetrizedGraph<T>) -> Result<MeasureSpec<T>> {
        match self {
            MeasureSelection::Lebesgue => MeasureSpec::lebesgue(graph),
            MeasureSelection::Custom { spec, .. } => Ok(spec.clone()),
        }
    }
}

/// One schedule point's outcome.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord<T> {
    /// Actual `|V_N|` of the model built for this point.
    pub n: usize,
    /// `N lambda_{i,N}`.
    pub scaled: T,
    pub multiplicity: usize,
    /// Present when a nearly-degenerate neighbor cluster was merged for the
    /// multiplicity comparison.
    pub merged_multiplicity: Option<usize>,
    /// Sup-norm distance of the eigenspace from the reference, when a
    /// reference with eigenfunctions exists.
    pub sup_distance: Option<T>,
    pub seconds: f64,
}

/// The continuous comparison value for a report.
#[derive(Debug, Clone)]
pub struct ReferenceInfo<T> {
    pub lambda: T,
    /// Known multiplicity (closed-form and secular references only).
    pub multiplicity: Option<usize>,
    pub provenance: Provenance,
    /// Extrapolation half-width, when the reference is extrapolated.
    pub uncertainty: Option<T>,
    pub functions: Vec<TrigFunction<T>>,
}

/// Power-law fit of the eigenvalue errors.
#[derive(Debug, Clone)]
pub struct RateFit<T> {
    pub p: T,
    pub m: T,
    pub r_squared: T,
    /// Records excluded because their error was exactly zero.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneCheck {
    pub increasing: bool,
    pub first_violation: Option<usize>,
    /// Indices where consecutive values tied within tolerance.
    pub ties: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport<T> {
    pub graph_id: String,
    pub measure_id: String,
    pub convention: Convention,
    pub index: usize,
    pub records: Vec<ConvergenceRecord<T>>,
    /// Schedule points that produced no record, with the reason.
    pub skipped: Vec<(usize, String)>,
    pub reference: Option<ReferenceInfo<T>>,
    pub rate: Option<RateFit<T>>,
    pub monotone: Option<MonotoneCheck>,
    pub stabilization_n0: Option<usize>,
    pub notes: Vec<String>,
}

/// Run the full schedule for eigenvalue index `index` (1-based) and
/// assemble the report. Reference selection prefers closed forms, then the
/// secular solver, then extrapolation from the records themselves.
pub fn run_schedule<T: Scalar>(
    graph: &Arc<MetrizedGraph<T>>,
    measure: &MeasureSelection<T>,
    index: usize,
    schedule: &[usize],
    convention: Convention,
) -> Result<ConvergenceReport<T>> {
    run_schedule_with_jobs(graph, measure, index, schedule, convention, 1)
}

/// As [`run_schedule`], computing schedule points on up to `jobs` threads.
/// The report is assembled in schedule order regardless of completion order.
pub fn run_schedule_with_jobs<T: Scalar>(
    graph: &Arc<MetrizedGraph<T>>,
    measure: &MeasureSelection<T>,
    index: usize,
    schedule: &[usize],
    convention: Convention,
    jobs: usize,
) -> Result<ConvergenceReport<T>> {
    if schedule.is_empty() {
        return Err(Error::Config("schedule is empty".into()));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("schedule must increase strictly".into()));
    }
    if index == 0 {
        return Err(Error::Config("eigenvalue index starts at 1".into()));
    }
    if convention == Convention::DxN && !matches!(measure, MeasureSelection::Lebesgue) {
        return Err(Error::Config(
            "convention dxN is defined for the Lebesgue measure; use voronoi for custom measures"
                .into(),
        ));
    }
    let spec = measure.resolve(graph)?;
    let breakpoints = spec.breakpoints(graph);
    let reference = resolve_reference(graph, measure, index);
    let mut notes = Vec::new();

    type PointOutcome<T> = std::result::Result<(ConvergenceRecord<T>, Option<String>), String>;
    let compute = |n_target: usize| -> Result<PointOutcome<T>> {
        let started = Instant::now();
        let model = Arc::new(build_model(graph, n_target, &breakpoints)?);
        let mu = match convention {
            Convention::DxN => dx_model_measure(&model),
            Convention::Voronoi => voronoi_discretize(&spec, &model)?,
        };
        let dim = model.n() - 1;
        if index > dim {
            return Ok(Err(format!(
                "cluster {index} not resolvable at N = {} (dimension {dim})",
                model.n()
            )));
        }
        let k = (index + 1).min(dim);
        let q = kirchhoff_matrix(&model);
        let solved = eigen_mu(&q, &mu, k)?;
        if solved.clusters.len() < index {
            return Ok(Err(format!(
                "only {} distinct clusters at N = {}",
                solved.clusters.len(),
                model.n()
            )));
        }
        let cluster = &solved.clusters[index - 1];

        // A neighboring cluster within 1e-4 relative counts toward the
        // multiplicity when the reference eigenvalue is multiple: finite-N
        // symmetry breaking splits what merges in the limit.
        let mut merged = None;
        let mut merge_note = None;
        if let Some(reference) = &reference {
            if let Some(ref_mult) = reference.multiplicity {
                if ref_mult > cluster.multiplicity && solved.clusters.len() > index {
                    let next = &solved.clusters[index];
                    let gap = (next.lambda - cluster.lambda) / cluster.lambda.max(T::one());
                    if gap <= T::of(1e-4) {
                        merged = Some(cluster.multiplicity + next.multiplicity);
                        merge_note = Some(format!(
                            "N = {}: clusters {} and {} within 1e-4 relative; merged for multiplicity comparison",
                            model.n(),
                            index,
                            index + 1
                        ));
                    }
                }
            }
        }

        let sup_distance = match &reference {
            Some(info) if !info.functions.is_empty() => {
                let discrete: Vec<&CpaFunction<T>> = cluster.functions.iter().collect();
                Some(align_subspace(&discrete, &info.functions)?.sup_distance)
            }
            _ => None,
        };

        Ok(Ok((
            ConvergenceRecord {
                n: model.n(),
                scaled: cluster.scaled,
                multiplicity: cluster.multiplicity,
                merged_multiplicity: merged,
                sup_distance,
                seconds: started.elapsed().as_secs_f64(),
            },
            merge_note,
        )))
    };

    let outcomes: Vec<Result<PointOutcome<T>>> = if jobs <= 1 {
        schedule.iter().map(|&n| compute(n)).collect()
    } else {
        let slots: Mutex<Vec<Option<Result<PointOutcome<T>>>>> =
            Mutex::new((0..schedule.len()).map(|_| None).collect());
        let cursor = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(schedule.len()) {
                scope.spawn(|| loop {
                    let at = cursor.fetch_add(1, Ordering::SeqCst);
                    if at >= schedule.len() {
                        break;
                    }
                    let outcome = compute(schedule[at]);
                    slots.lock().expect("worker poisoned").insert_slot(at, outcome);
                });
            }
        });
        slots
            .into_inner()
            .expect("worker poisoned")
            .into_iter()
            .map(|slot| slot.expect("all schedule points computed"))
            .collect()
    };

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (&n_target, outcome) in schedule.iter().zip(outcomes) {
        match outcome? {
            Ok((record, merge_note)) => {
                records.push(record);
                if let Some(note) = merge_note {
                    notes.push(note);
                }
            }
            Err(reason) => skipped.push((n_target, reason)),
        }
    }

    // Fall back to extrapolation when no analytic reference exists.
    let reference = match reference {
        Some(info) => Some(info),
        None => {
            let pairs: Vec<(usize, T)> = records.iter().map(|r| (r.n, r.scaled)).collect();
            match extrapolate_reference(&pairs) {
                Ok(fit) => {
                    if let Some(note) = &fit.note {
                        notes.push(format!("extrapolated reference: {note}"));
                    }
                    Some(ReferenceInfo {
                        lambda: fit.limit,
                        multiplicity: None,
                        provenance: Provenance::Extrapolated,
                        uncertainty: Some(fit.uncertainty),
                        functions: Vec::new(),
                    })
                }
                Err(_) => None,
            }
        }
    };

    let rate = reference.as_ref().and_then(|info| {
        let pairs: Vec<(usize, T)> = records.iter().map(|r| (r.n, r.scaled)).collect();
        fit_rate(&pairs, info.lambda).ok()
    });
    let monotone = if records.len() >= 2 {
        Some(check_monotone(
            &records.iter().map(|r| r.scaled).collect::<Vec<_>>(),
        ))
    } else {
        None
    };
    let stabilization_n0 = stabilization_scan_impl(&records, reference.as_ref());

    Ok(ConvergenceReport {
        graph_id: graph.name().unwrap_or("custom").to_string(),
        measure_id: measure.id().to_string(),
        convention,
        index,
        records,
        skipped,
        reference,
        rate,
        monotone,
        stabilization_n0,
        notes,
    })
}

trait SlotInsert<T> {
    fn insert_slot(&mut self, at: usize, value: T);
}

impl<T> SlotInsert<T> for Vec<Option<T>> {
    fn insert_slot(&mut self, at: usize, value: T) {
        self[at] = Some(value);
    }
}

fn resolve_reference<T: Scalar>(
    graph: &Arc<MetrizedGraph<T>>,
    measure: &MeasureSelection<T>,
    index: usize,
) -> Option<ReferenceInfo<T>> {
    if !matches!(measure, MeasureSelection::Lebesgue) {
        return None;
    }
    let from_entries = |spectrum: crate::reference::ContinuousSpectrum<T>| {
        spectrum
            .entries
            .get(index - 1)
            .map(|entry| ReferenceInfo {
                lambda: entry.lambda,
                multiplicity: Some(entry.multiplicity),
                provenance: spectrum.provenance,
                uncertainty: None,
                functions: entry.functions.clone(),
            })
    };
    match graph.name() {
        Some("interval") => from_entries(interval_spectrum(index)),
        Some("circle") => from_entries(circle_spectrum(index)),
        _ => {
            let shortest = graph
                .segments()
                .iter()
                .fold(T::infinity(), |acc, s| acc.min(s.length))
                .f64();
            let mut lambda_max =
                ((index as f64 + 1.0) * std::f64::consts::PI / shortest).powi(2);
            for _ in 0..3 {
                match secular_spectrum(graph, lambda_max, index) {
                    Ok(spectrum) if spectrum.entries.len() >= index => {
                        return from_entries(spectrum);
                    }
                    _ => lambda_max *= 4.0,
                }
            }
            None
        }
    }
}

/// Least squares on `log |lambda_ref - N lambda_N|` against `log N`.
/// Exactly-zero errors are excluded (they carry no rate information).
pub fn fit_rate<T: Scalar>(records: &[(usize, T)], reference: T) -> Result<RateFit<T>> {
    if records.len() < 3 {
        return Err(Error::TooFewRecords {
            needed: 3,
            got: records.len(),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0usize;
    for &(n, scaled) in records {
        let err = (reference - scaled).abs();
        if err == T::zero() {
            excluded += 1;
            continue;
        }
        xs.push(T::from_usize(n).expect("count").ln());
        ys.push(err.ln());
    }
    if xs.len() < 2 {
        return Err(Error::TooFewRecords {
            needed: 2,
            got: xs.len(),
        });
    }
    let n = T::from_usize(xs.len()).expect("count");
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
        syy = syy + (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > T::zero() {
        (sxy * sxy) / (sxx * syy)
    } else {
        T::one()
    };
    Ok(RateFit {
        p: -slope,
        m: intercept.exp(),
        r_squared,
        excluded,
    })
}

/// Strict monotone increase along the schedule, with a `1e-12`-relative
/// tie tolerance; ties are flagged, not counted as violations.
pub fn check_monotone<T: Scalar>(scaled: &[T]) -> MonotoneCheck {
    let mut ties = Vec::new();
    let mut first_violation = None;
    for i in 1..scaled.len() {
        let tol = T::of(1e-12) * scaled[i].abs().max(T::one());
        if (scaled[i] - scaled[i - 1]).abs() <= tol {
            ties.push(i);
        } else if scaled[i] < scaled[i - 1] && first_violation.is_none() {
            first_violation = Some(i);
        }
    }
    MonotoneCheck {
        increasing: first_violation.is_none(),
        first_violation,
        ties,
    }
}

/// Eigenspace comparison between a discrete cluster and reference
/// eigenfunctions.
#[derive(Debug, Clone)]
pub struct Alignment<T> {
    /// Sup-norm over a dense sample (10 points per model edge) of the
    /// distance from the reference to the aligned discrete span.
    pub sup_distance: T,
    /// Principal angles between the two spans in the exact CPA L2 product.
    pub principal_angles: Vec<T>,
    pub dimension_mismatch: bool,
}

/// Compare eigenspaces: sign alignment in dimension one, principal angles
/// and least-squares alignment in higher dimension. The reference is
/// sampled at model vertices for inner products, but the sup distance is
/// measured against the reference evaluated exactly.
pub fn align_subspace<T: Scalar>(
    discrete: &[&CpaFunction<T>],
    reference: &[TrigFunction<T>],
) -> Result<Alignment<T>> {
    if discrete.is_empty() || reference.is_empty() {
        return Err(Error::Config("empty eigenspace comparison".into()));
    }
    let model = discrete[0].model();
    let dimension_mismatch = discrete.len() != reference.len();
    let samples = model.sample_points(10);

    // Reference sampled at vertices, then treated as CPA.
    let sampled: Vec<CpaFunction<T>> = reference
        .iter()
        .map(|r| {
            let values: Vec<T> = (0..model.n())
                .map(|id| r.eval(&model.vertex_point(id)))
                .collect();
            CpaFunction::new(Arc::clone(model), values)
        })
        .collect::<Result<Vec<_>>>()?;

    if discrete.len() == 1 && reference.len() == 1 {
        let align = inner_l2_exact(discrete[0], &sampled[0])?;
        let sign = if align >= T::zero() { T::one() } else { -T::one() };
        let mut sup = T::zero();
        for p in &samples {
            let d = sign * discrete[0].eval(p)?;
            let r = reference[0].eval(p);
            sup = sup.max((d - r).abs());
        }
        let norm_d = inner_l2_exact(discrete[0], discrete[0])?.sqrt();
        let norm_r = inner_l2_exact(&sampled[0], &sampled[0])?.sqrt();
        let cos = (align.abs() / (norm_d * norm_r)).min(T::one());
        return Ok(Alignment {
            sup_distance: sup,
            principal_angles: vec![cos.acos()],
            dimension_mismatch,
        });
    }

    // Orthonormalize both families in the exact CPA L2 product.
    let ortho_d = l2_orthonormalize(discrete)?;
    let refs: Vec<&CpaFunction<T>> = sampled.iter().collect();
    let ortho_r = l2_orthonormalize(&refs)?;

    let shared = ortho_d.len().min(ortho_r.len());
    let mut cross = ndarray::Array2::<T>::zeros((ortho_d.len(), ortho_r.len()));
    for (a, da) in ortho_d.iter().enumerate() {
        for (b, rb) in ortho_r.iter().enumerate() {
            cross[[a, b]] = inner_l2_exact(da, rb)?;
        }
    }
    // Singular values of the cross-Gram are the principal cosines.
    let mut ctc = ndarray::Array2::<T>::zeros((ortho_r.len(), ortho_r.len()));
    for i in 0..ortho_r.len() {
        for j in 0..ortho_r.len() {
            let mut acc = T::zero();
            for a in 0..ortho_d.len() {
                acc = acc + cross[[a, i]] * cross[[a, j]];
            }
            ctc[[i, j]] = acc;
        }
    }
    let eig = linalg::sym_eigen(&ctc)?;
    let mut cosines: Vec<T> = eig
        .values
        .iter()
        .rev()
        .take(shared)
        .map(|&v| v.max(T::zero()).sqrt().min(T::one()))
        .collect();
    cosines.reverse(); // ascending cosines -> descending angles
    let principal_angles: Vec<T> = cosines.iter().rev().map(|&c| c.acos()).collect();

    // Least-squares alignment: project each reference onto the original
    // discrete span, then take the sup of the pointwise gap.
    let dim = discrete.len();
    let mut gram = ndarray::Array2::<T>::zeros((dim, dim));
    for a in 0..dim {
        for b in 0..dim {
            gram[[a, b]] = inner_l2_exact(discrete[a], discrete[b])?;
        }
    }
    let solver = SpdSolver::new(&gram)?;
    let mut sup = T::zero();
    for (r_trig, r_cpa) in reference.iter().zip(sampled.iter()) {
        let rhs: Vec<T> = discrete
            .iter()
            .map(|d| inner_l2_exact(d, r_cpa))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = solver.solve(&rhs);
        for p in &samples {
            let mut approx = T::zero();
            for (c, d) in coeffs.iter().zip(discrete.iter()) {
                approx = approx + *c * d.eval(p)?;
            }
            sup = sup.max((approx - r_trig.eval(p)).abs());
        }
    }

    Ok(Alignment {
        sup_distance: sup,
        principal_angles,
        dimension_mismatch,
    })
}

fn l2_orthonormalize<T: Scalar>(family: &[&CpaFunction<T>]) -> Result<Vec<CpaFunction<T>>> {
    let mut out: Vec<CpaFunction<T>> = Vec::with_capacity(family.len());
    for f in family {
        let mut values = f.values().to_vec();
        for prev in &out {
            let coeff = inner_l2_exact(
                &CpaFunction::new(Arc::clone(f.model()), values.clone())?,
                prev,
            )?;
            for (v, p) in values.iter_mut().zip(prev.values()) {
                *v = *v - coeff * *p;
            }
        }
        let candidate = CpaFunction::new(Arc::clone(f.model()), values)?;
        let norm = inner_l2_exact(&candidate, &candidate)?.sqrt();
        if norm <= T::of(1e-13) {
            continue; // linearly dependent input; drop it
        }
        out.push(candidate.scaled(T::one() / norm));
    }
    Ok(out)
}

/// Smallest schedule N from which the (merged) multiplicity stays constant
/// through the end, agreeing with the reference multiplicity when one is
/// known. `None` when the multiplicities never settle.
pub fn stabilization_scan<T: Scalar>(report: &ConvergenceReport<T>) -> Option<usize> {
    stabilization_scan_impl(&report.records, report.reference.as_ref())
}

fn stabilization_scan_impl<T: Scalar>(
    records: &[ConvergenceRecord<T>],
    reference: Option<&ReferenceInfo<T>>,
) -> Option<usize> {
    if records.len() < 2 {
        return None;
    }
    let eff = |r: &ConvergenceRecord<T>| r.merged_multiplicity.unwrap_or(r.multiplicity);
    let last = eff(records.last().expect("nonempty"));
    if let Some(info) = reference {
        if let Some(m) = info.multiplicity {
            if m != last {
                return None;
            }
        }
    }
    let mut start = records.len() - 1;
    while start > 0 && eff(&records[start - 1]) == last {
        start -= 1;
    }
    // A stable run consisting of the final record alone is no evidence of
    // stabilization.
    if start == records.len() - 1 {
        return None;
    }
    Some(records[start].n)
}

impl<T: Scalar> ConvergenceReport<T> {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "graph": self.graph_id,
            "measure": self.measure_id,
            "convention": self.convention.as_str(),
            "index": self.index,
            "records": self.records.iter().map(|r| json!({
                "n": r.n,
                "scaled": r.scaled.f64(),
                "multiplicity": r.multiplicity,
                "merged_multiplicity": r.merged_multiplicity,
                "sup_distance": r.sup_distance.map(|d| d.f64()),
                "seconds": r.seconds,
            })).collect::<Vec<_>>(),
            "skipped": self.skipped.iter().map(|(n, why)| json!({
                "n_target": n, "reason": why,
            })).collect::<Vec<_>>(),
            "reference": self.reference.as_ref().map(|info| json!({
                "lambda": info.lambda.f64(),
                "multiplicity": info.multiplicity,
                "provenance": info.provenance.as_str(),
                "uncertainty": info.uncertainty.map(|u| u.f64()),
            })),
            "rate": self.rate.as_ref().map(|fit| json!({
                "p": fit.p.f64(),
                "m": fit.m.f64(),
                "r_squared": fit.r_squared.f64(),
                "excluded": fit.excluded,
            })),
            "monotone": self.monotone.as_ref().map(|m| json!({
                "increasing": m.increasing,
                "first_violation": m.first_violation,
                "ties": m.ties,
            })),
            "stabilization_n0": self.stabilization_n0,
            "notes": self.notes,
        })
    }

    /// One row per record: `n,scaled,multiplicity,sup_distance,seconds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,scaled,multiplicity,sup_distance,seconds\n");
        for r in &self.records {
            let sup = r
                .sup_distance
                .map(|d| d.f64().to_string())
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.n,
                r.scaled.f64(),
                r.merged_multiplicity.unwrap_or(r.multiplicity),
                sup,
                r.seconds
            );
        }
        out
    }

    /// Log-log error data for external plotting; records with exactly zero
    /// error are omitted.
    pub fn to_plot_csv(&self) -> String {
        let mut out = String::from("log10_n,log10_abs_error\n");
        if let Some(info) = &self.reference {
            for r in &self.records {
                let err = (info.lambda - r.scaled).abs().f64();
                if err > 0.0 {
                    let _ = writeln!(out, "{},{}", (r.n as f64).log10(), err.log10());
                }
            }
        }
        out
    }
}
