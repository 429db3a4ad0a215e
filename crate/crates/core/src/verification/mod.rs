//! Manufactured solutions, error norms and convergence studies.

mod fields;

pub use fields::{forcing, make_case, ExactPoint, Factor, Jet, ManufacturedCase, ScalarField, Term, VectorJet};

use std::fmt::Write as _;
use std::io::Write;

use crate::assembly::{max_divergence, oseen_iterate_with, DivergenceField, IterationRecord, OseenOptions, StateVector};
use crate::basis::{make_basis, make_quadrature, poly_dim, PhysicalBasis};
use crate::error::{invalid, Error, Result};
use crate::forms::{curl_components, curl_of_vector, Field};
use crate::mesh::{build_unit_cube_mesh, build_unit_square_mesh, SimplicialMesh};

/// Errors below this are treated as exact when extracting orders.
pub const ORDER_FLOOR: f64 = 1e-14;

/// Exact norms at or below this are round-off; the error is then reported
/// as absolute.
pub const ABSOLUTE_THRESHOLD: f64 = 1e-12;

/// Error norms of one discrete solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub u_l2: f64,
    pub grad_u: f64,
    pub b_l2: f64,
    pub curl_b: f64,
    pub t_l2: f64,
    pub grad_t: f64,
    pub l_l2: f64,
    pub n_l2: f64,
    pub a_l2: f64,
    pub p_l2: f64,
    pub r_l2: f64,
    pub div_u: f64,
    pub div_b: f64,
    /// Norms reported as absolute errors because the exact norm vanishes.
    pub absolute: Vec<&'static str>,
}

impl ErrorReport {
    /// Column identifiers, in the order of [`ErrorReport::values`].
    pub const COLUMNS: [&'static str; 13] =
        ["u_l2", "grad_u", "b_l2", "curl_b", "t_l2", "grad_t", "l_l2", "n_l2", "a_l2", "p_l2", "r_l2", "div_u", "div_b"];

    /// Number of leading columns that are discretization errors (and get orders).
    pub const ERROR_COLUMNS: usize = 11;

    pub fn values(&self) -> [f64; 13] {
        [
            self.u_l2, self.grad_u, self.b_l2, self.curl_b, self.t_l2, self.grad_t, self.l_l2, self.n_l2, self.a_l2,
            self.p_l2, self.r_l2, self.div_u, self.div_b,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::COLUMNS.iter().position(|c| *c == name).map(|i| self.values()[i])
    }
}

#[derive(Default)]
struct Acc {
    err: f64,
    exact: f64,
}

impl Acc {
    fn add(&mut self, w: f64, exact: f64, approx: f64) {
        self.err += w * (exact - approx).powi(2);
        self.exact += w * exact * exact;
    }

    fn finish(&self, name: &'static str, absolute: &mut Vec<&'static str>) -> f64 {
        let e = self.err.max(0.0).sqrt();
        let n = self.exact.sqrt();
        if n > ABSOLUTE_THRESHOLD {
            e / n
        } else {
            absolute.push(name);
            e
        }
    }
}

fn combine(c: &[f64], phi: &[f64]) -> f64 {
    c.iter().zip(phi).map(|(a, b)| a * b).sum()
}

fn combine_grad(c: &[f64], g: &[[f64; 3]]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (a, gi) in c.iter().zip(g) {
        for m in 0..3 {
            out[m] += a * gi[m];
        }
    }
    out
}

/// All norms of [`ErrorReport`] for `state` against the exact fields of
/// `case`, using element quadrature of order `2k + 4`.
pub fn compute_error_report(state: &StateVector, case: &ManufacturedCase, mesh: &SimplicialMesh) -> Result<ErrorReport> {
    let map = &state.map;
    let d = mesh.dim();
    if d != case.dim {
        return Err(invalid("case and mesh dimensions differ"));
    }
    if map.num_elements != mesh.num_elements() || map.dim != d {
        return Err(invalid("state does not belong to this mesh"));
    }
    let k = map.k;
    let nk = poly_dim(d, k);
    let n1 = poly_dim(d, k - 1);
    let nc = curl_components(d);
    let rule = make_quadrature(d, 2 * k + 4)?;
    let reference = make_basis(d, k)?;
    let par = &case.params;
    let (ha2, rm2, prre) = (par.ha * par.ha, par.rm * par.rm, par.pr_re());

    let mut acc: [Acc; 11] = Default::default();
    // Means of r and r_h for the mean-adjusted error.
    let (mut vol, mut r_mean, mut rh_mean) = (0.0, 0.0, 0.0);
    let mut r_samples: Vec<(f64, f64, f64)> = Vec::new();
    for e in 0..mesh.num_elements() {
        let basis = PhysicalBasis::from_parts(reference.clone(), mesh.affine_map(e));
        let det = basis.map.det.abs();
        let uc = state.interior(e, Field::U);
        let bc = state.interior(e, Field::B);
        let tc = state.interior(e, Field::T);
        let lc = state.interior(e, Field::L);
        let nc_ = state.interior(e, Field::N);
        let ac = state.interior(e, Field::A);
        let pc = state.interior(e, Field::P);
        let rc = state.interior(e, Field::R);
        for (xi, w0) in rule.points.iter().zip(&rule.weights) {
            let w = w0 * det;
            let x = basis.map.apply(xi);
            let phi = basis.eval_ref(xi);
            let grad = basis.grad_ref(xi);
            let ex = case.exact(&x);
            let ju = ex.u.jacobian();
            let jb = ex.b.jacobian();
            let mut jbh = [[0.0; 3]; 3];
            for i in 0..d {
                let uh = combine(&uc[i * nk..(i + 1) * nk], &phi);
                let bh = combine(&bc[i * nk..(i + 1) * nk], &phi);
                acc[0].add(w, ex.u.c[i].value, uh);
                acc[2].add(w, ex.b.c[i].value, bh);
                let guh = combine_grad(&uc[i * nk..(i + 1) * nk], &grad);
                jbh[i] = combine_grad(&bc[i * nk..(i + 1) * nk], &grad);
                for j in 0..d {
                    acc[1].add(w, ju[i][j], guh[j]);
                    let lh = combine(&lc[(i * d + j) * n1..(i * d + j + 1) * n1], &phi[..n1]);
                    acc[6].add(w, ju[i][j] / ha2, lh);
                }
            }
            let curl = curl_of_vector(d, &jb);
            let curl_h = curl_of_vector(d, &jbh);
            for c in 0..nc {
                acc[3].add(w, curl[c], curl_h[c]);
                let nh = combine(&nc_[c * n1..(c + 1) * n1], &phi[..n1]);
                acc[7].add(w, curl[c] / rm2, nh);
            }
            acc[4].add(w, ex.t.value, combine(tc, &phi));
            let gth = combine_grad(tc, &grad);
            for j in 0..d {
                acc[5].add(w, ex.t.grad[j], gth[j]);
                acc[8].add(w, ex.t.grad[j] / prre, combine(&ac[j * n1..(j + 1) * n1], &phi[..n1]));
            }
            acc[9].add(w, ex.p.value, combine(pc, &phi[..n1]));
            let rh = combine(rc, &phi[..n1]);
            vol += w;
            r_mean += w * ex.r.value;
            rh_mean += w * rh;
            r_samples.push((w, ex.r.value, rh));
        }
    }
    r_mean /= vol;
    rh_mean /= vol;
    for (w, r, rh) in r_samples {
        acc[10].add(w, r - r_mean, rh - rh_mean);
    }
    let mut absolute = Vec::new();
    let v: Vec<f64> = (0..11).map(|i| acc[i].finish(ErrorReport::COLUMNS[i], &mut absolute)).collect();
    let div_u = max_divergence(state, DivergenceField::Velocity, mesh)?.max();
    let div_b = max_divergence(state, DivergenceField::Magnetic, mesh)?.max();
    Ok(ErrorReport {
        u_l2: v[0],
        grad_u: v[1],
        b_l2: v[2],
        curl_b: v[3],
        t_l2: v[4],
        grad_t: v[5],
        l_l2: v[6],
        n_l2: v[7],
        a_l2: v[8],
        p_l2: v[9],
        r_l2: v[10],
        div_u,
        div_b,
        absolute,
    })
}

/// Results of one mesh level.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub m: usize,
    pub h: f64,
    pub num_dofs: usize,
    pub report: ErrorReport,
    pub log: Vec<IterationRecord>,
}

impl LevelResult {
    pub fn iterations(&self) -> usize {
        self.log.len()
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub case: String,
    pub dim: usize,
    pub k: usize,
    pub levels: Vec<LevelResult>,
}

/// Observed order between two levels, or `None` if either error is at the
/// round-off floor.
pub fn observed_order(e_coarse: f64, e_fine: f64, m_coarse: usize, m_fine: usize) -> Option<f64> {
    if e_coarse > ORDER_FLOOR && e_fine > ORDER_FLOOR && e_coarse.is_finite() && e_fine.is_finite() {
        Some((e_coarse / e_fine).ln() / (m_fine as f64 / m_coarse as f64).ln())
    } else {
        None
    }
}

impl ConvergenceReport {
    /// Orders of the error columns for level `i` against level `i - 1`.
    pub fn orders(&self, i: usize) -> Vec<Option<f64>> {
        if i == 0 || i >= self.levels.len() {
            return vec![None; ErrorReport::ERROR_COLUMNS];
        }
        let (a, b) = (&self.levels[i - 1], &self.levels[i]);
        let (va, vb) = (a.report.values(), b.report.values());
        (0..ErrorReport::ERROR_COLUMNS).map(|c| observed_order(va[c], vb[c], a.m, b.m)).collect()
    }

    /// Order of one named column between the last two levels.
    pub fn last_order(&self, column: &str) -> Option<f64> {
        let c = ErrorReport::COLUMNS[..ErrorReport::ERROR_COLUMNS].iter().position(|n| *n == column)?;
        self.orders(self.levels.len().checked_sub(1)?)[c]
    }

    /// CSV header: level info, one column per norm, one per order.
    pub fn csv_header(tag: Option<&str>) -> Vec<String> {
        let mut h: Vec<String> = Vec::new();
        if let Some(t) = tag {
            h.push(t.to_string());
        }
        h.extend(["m", "h", "dofs", "iterations"].iter().map(|s| s.to_string()));
        h.extend(ErrorReport::COLUMNS.iter().map(|s| s.to_string()));
        h.extend(ErrorReport::COLUMNS[..ErrorReport::ERROR_COLUMNS].iter().map(|s| format!("{s}_order")));
        h
    }

    /// Writes one CSV row per level. With `tag = Some((name, value))` every
    /// row starts with `value` under column `name`.
    pub fn write_csv<W: Write>(&self, w: W, tag: Option<(&str, &str)>) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Internal(format!("csv output failed: {e}"));
        wr.write_record(Self::csv_header(tag.map(|t| t.0))).map_err(io)?;
        for (i, lv) in self.levels.iter().enumerate() {
            let mut rec: Vec<String> = Vec::new();
            if let Some((_, v)) = tag {
                rec.push(v.to_string());
            }
            rec.push(lv.m.to_string());
            rec.push(format!("{:.6e}", lv.h));
            rec.push(lv.num_dofs.to_string());
            rec.push(lv.iterations().to_string());
            rec.extend(lv.report.values().iter().map(|v| format!("{v:.6e}")));
            rec.extend(self.orders(i).iter().map(|o| o.map(|o| format!("{o:.4}")).unwrap_or_default()));
            wr.write_record(&rec).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Internal(format!("csv output failed: {e}")))?;
        Ok(())
    }

    /// Aligned text table with an error and an order column per norm.
    pub fn to_table(&self) -> String {
        self.to_tagged_table(None)
    }

    /// As [`to_table`](Self::to_table), with `value` in a leading `name`
    /// column of every row.
    pub fn to_tagged_table(&self, tag: Option<(&str, &str)>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} k={} (dim {})", self.case, self.k, self.dim);
        let cols = &ErrorReport::COLUMNS[..ErrorReport::ERROR_COLUMNS];
        if let Some((name, value)) = tag {
            let _ = write!(s, "{:<w$} ", name, w = value.len());
        }
        let _ = write!(s, "{:>5} {:>5}", "M", "iter");
        for c in cols {
            let _ = write!(s, " {:>11} {:>6}", c, "order");
        }
        let _ = writeln!(s, " {:>11} {:>11}", "div_u", "div_b");
        for (i, lv) in self.levels.iter().enumerate() {
            let v = lv.report.values();
            let o = self.orders(i);
            if let Some((name, value)) = tag {
                let _ = write!(s, "{:<w$} ", value, w = name.len());
            }
            let _ = write!(s, "{:>5} {:>5}", lv.m, lv.iterations());
            for c in 0..cols.len() {
                let ord = o[c].map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
                let _ = write!(s, " {:>11.4e} {:>6}", v[c], ord);
            }
            let _ = writeln!(s, " {:>11.3e} {:>11.3e}", v[11], v[12]);
        }
        s
    }
}

/// Progress notifications of a convergence study.
#[derive(Debug, Clone)]
pub enum StudyEvent<'a> {
    LevelStart { m: usize, num_dofs: usize },
    Iteration { m: usize, record: &'a IterationRecord },
    LevelDone { result: &'a LevelResult },
}

fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() {
        return Err(invalid("mesh level list is empty"));
    }
    if levels[0] == 0 {
        return Err(invalid("mesh levels must be positive"));
    }
    for w in levels.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(invalid(format!("mesh levels must double: {} is followed by {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// Builds the structured mesh of size `m` matching the case dimension.
pub fn case_mesh(case: &ManufacturedCase, m: usize) -> Result<SimplicialMesh> {
    match case.dim {
        2 => build_unit_square_mesh(m),
        3 => build_unit_cube_mesh(m),
        d => Err(invalid(format!("unsupported dimension {d}"))),
    }
}

/// Solves and measures one level.
pub fn run_level(
    case: &ManufacturedCase,
    k: usize,
    m: usize,
    options: OseenOptions,
    on_event: &mut dyn FnMut(StudyEvent<'_>),
) -> Result<LevelResult> {
    let mesh = case_mesh(case, m)?;
    let map = crate::assembly::build_dofmap(&mesh, k)?;
    on_event(StudyEvent::LevelStart { m, num_dofs: map.total });
    let res = oseen_iterate_with(&mesh, k, &case.params, case, options, |r| on_event(StudyEvent::Iteration { m, record: r }))?;
    let report = compute_error_report(&res.state, case, &mesh)?;
    let result = LevelResult { m, h: mesh.max_diameter(), num_dofs: map.total, report, log: res.log };
    on_event(StudyEvent::LevelDone { result: &result });
    Ok(result)
}

/// Runs `case` on each level of `levels` (doubling sequence) and collects
/// the error reports.
pub fn run_study(
    case: &ManufacturedCase,
    k: usize,
    levels: &[usize],
    options: OseenOptions,
    mut on_event: impl FnMut(StudyEvent<'_>),
) -> Result<ConvergenceReport> {
    check_levels(levels)?;
    if k == 0 {
        return Err(invalid("polynomial degree k must be at least 1"));
    }
    let mut out = ConvergenceReport { case: case.name.clone(), dim: case.dim, k, levels: Vec::new() };
    for &m in levels {
        let lv = run_level(case, k, m, options, &mut on_event)
            .map_err(|e| Error::AtLevel { m, source: Box::new(e) })?;
        out.levels.push(lv);
    }
    Ok(out)
}

/// Convergence study of a built-in example with default Oseen options.
pub fn convergence_study(example: usize, k: usize, levels: &[usize]) -> Result<ConvergenceReport> {
    let case = make_case(example)?;
    run_study(&case, k, levels, OseenOptions::default(), |_| {})
}
