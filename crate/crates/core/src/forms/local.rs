use nalgebra::{DMatrix, DVector};

use super::{cross, curl_of_curl_space, curl_components, dot, ElementContext, Field, Form, LocalBlocks, ProblemData};
use crate::params::PhysicalParameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Physics {
    Velocity,
    Magnetic,
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Pressure,
    PseudoPressure,
}

/// Previous Oseen iterate restricted to one element: interior velocity and
/// magnetic coefficients and the velocity trace on each local facet.
#[derive(Debug, Clone)]
pub struct PrevIterate<'a> {
    pub u: &'a [f64],
    pub b: &'a [f64],
    pub u_hat: Vec<&'a [f64]>,
}

impl PrevIterate<'_> {
    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(self.b).chain(self.u_hat.iter().flat_map(|s| s.iter())).all(|v| *v == 0.0)
    }
}

fn unit(c: usize) -> [f64; 3] {
    let mut e = [0.0; 3];
    e[c] = 1.0;
    e
}

/// Value of a vector field with `dim * n` component-major coefficients.
fn vector_value(dim: usize, coeffs: &[f64], phi: &[f64]) -> [f64; 3] {
    let n = coeffs.len() / dim;
    let mut v = [0.0; 3];
    for c in 0..dim {
        v[c] = coeffs[c * n..(c + 1) * n].iter().zip(phi).map(|(a, p)| a * p).sum();
    }
    v
}

/// Jacobian `jac[c][m] = d_m v_c` of a vector field.
fn vector_jacobian(dim: usize, coeffs: &[f64], grad: &[[f64; 3]]) -> [[f64; 3]; 3] {
    let n = coeffs.len() / dim;
    let mut j = [[0.0; 3]; 3];
    for c in 0..dim {
        for (a, g) in coeffs[c * n..(c + 1) * n].iter().zip(grad) {
            for m in 0..dim {
                j[c][m] += a * g[m];
            }
        }
    }
    j
}

/// Curl of `a x b` from values and Jacobians of both factors.
fn curl_of_cross(dim: usize, a: &[f64; 3], ja: &[[f64; 3]; 3], b: &[f64; 3], jb: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut jx = [[0.0; 3]; 3];
    for m in 0..dim {
        let da = [ja[0][m], ja[1][m], ja[2][m]];
        let db = [jb[0][m], jb[1][m], jb[2][m]];
        let x1 = cross(dim, &da, b);
        let x2 = cross(dim, a, &db);
        for c in 0..3 {
            jx[c][m] = x1[c] + x2[c];
        }
    }
    curl_of_curl_space(dim, &jx)
}

/// Flux-mass block and the mixed couplings between a flux and its primal
/// pair.
///
/// Velocity: `Ha^2 (L, J) + (u, div J) - <u^, J n> = 0` in the flux rows and
/// the negative transpose in the momentum rows, so `L = grad u / Ha^2`.
/// Magnetic: `Rm^2 (N, I) - (B, curl I) - <I, n x B^> = 0`, `N = curl B / Rm^2`.
/// Thermal: `Pr Re (A, E) + (T, div E) - <T^, E.n> = 0`, `A = grad T / (Pr Re)`.
pub fn local_mixed_flux_block(physics: Physics, ctx: &ElementContext, params: &PhysicalParameters) -> LocalBlocks {
    let mut out = ctx.blocks();
    let (d, n1, nk, mf) = (ctx.dim, ctx.n1, ctx.nk, ctx.mf);
    let mut mass = DMatrix::<f64>::zeros(n1, n1);
    for q in &ctx.points {
        for a in 0..n1 {
            for b in 0..n1 {
                mass[(a, b)] += q.w * q.phi[a] * q.phi[b];
            }
        }
    }
    match physics {
        Physics::Velocity | Physics::Thermal => {
            let (flux, primal, rows, coef, mass_form, mixed_form) = if physics == Physics::Velocity {
                (Field::L, Field::U, d, params.ha * params.ha, Form::VelocityFluxMass, Form::VelocityMixed)
            } else {
                (Field::A, Field::T, 1, params.pr_re(), Form::ThermalFluxMass, Form::ThermalMixed)
            };
            // Flux index ((i * d + j) * n1 + a) for component i of the primal field.
            let mut fm = out.zeros(flux, flux);
            let mut fu = out.zeros(flux, primal);
            for i in 0..rows {
                for j in 0..d {
                    let r0 = (i * d + j) * n1;
                    for a in 0..n1 {
                        for b in 0..n1 {
                            fm[(r0 + a, r0 + b)] = coef * mass[(a, b)];
                        }
                    }
                    for q in &ctx.points {
                        for a in 0..n1 {
                            let ga = q.w * q.grad[a][j];
                            for b in 0..nk {
                                fu[(r0 + a, i * nk + b)] += ga * q.phi[b];
                            }
                        }
                    }
                }
            }
            out.push(mass_form, flux, flux, fm);
            out.push_pair(mixed_form, flux, primal, fu, -1.0);
            for (l, fd) in ctx.facets.iter().enumerate() {
                let hat = if physics == Physics::Velocity { Field::UHat(l) } else { Field::THat(l) };
                let mut fh = out.zeros(flux, hat);
                for i in 0..rows {
                    for j in 0..d {
                        let r0 = (i * d + j) * n1;
                        for p in &fd.points {
                            let wn = p.w * fd.normal[j];
                            for a in 0..n1 {
                                for m in 0..mf {
                                    fh[(r0 + a, i * mf + m)] -= wn * p.phi[a] * p.psi[m];
                                }
                            }
                        }
                    }
                }
                out.push_pair(mixed_form, flux, hat, fh, -1.0);
            }
        }
        Physics::Magnetic => {
            let nc = curl_components(d);
            let coef = params.rm * params.rm;
            let mut nn = out.zeros(Field::N, Field::N);
            for c in 0..nc {
                for a in 0..n1 {
                    for b in 0..n1 {
                        nn[(c * n1 + a, c * n1 + b)] = coef * mass[(a, b)];
                    }
                }
            }
            out.push(Form::MagneticFluxMass, Field::N, Field::N, nn);
            let mut nb = out.zeros(Field::N, Field::B);
            for q in &ctx.points {
                for c in 0..nc {
                    for a in 0..n1 {
                        // curl of phi_a e_c
                        let mut jac = [[0.0; 3]; 3];
                        jac[c] = q.grad[a];
                        let ci = curl_of_curl_space(d, &jac);
                        for cb in 0..d {
                            for b in 0..nk {
                                nb[(c * n1 + a, cb * nk + b)] -= q.w * ci[cb] * q.phi[b];
                            }
                        }
                    }
                }
            }
            out.push_pair(Form::MagneticMixed, Field::N, Field::B, nb, -1.0);
            for (l, fd) in ctx.facets.iter().enumerate() {
                let mut nh = out.zeros(Field::N, Field::BHat(l));
                for t in 0..d {
                    let nf = cross(d, &fd.normal, &fd.frame[t]);
                    for p in &fd.points {
                        for c in 0..nc {
                            let wc = p.w * nf[c];
                            for a in 0..n1 {
                                for m in 0..mf {
                                    nh[(c * n1 + a, t * mf + m)] -= wc * p.phi[a] * p.psi[m];
                                }
                            }
                        }
                    }
                }
                out.push_pair(Form::MagneticMixed, Field::N, Field::BHat(l), nh, -1.0);
            }
        }
    }
    out
}

/// Facet penalties `(1/Ha^2) tau <u - u^, v - v^>`,
/// `tau <n x (B - B^), n x (w - w^)>` and `(1/(Pr Re)) tau <T - T^, z - z^>`.
pub fn local_stabilization_block(physics: Physics, ctx: &ElementContext, params: &PhysicalParameters) -> LocalBlocks {
    let mut out = ctx.blocks();
    let (d, nk, mf) = (ctx.dim, ctx.nk, ctx.mf);
    match physics {
        Physics::Velocity | Physics::Thermal => {
            let (primal, comps, coef, form) = if physics == Physics::Velocity {
                (Field::U, d, ctx.tau / (params.ha * params.ha), Form::VelocityStabilization)
            } else {
                (Field::T, 1, ctx.tau / params.pr_re(), Form::ThermalStabilization)
            };
            let mut uu = out.zeros(primal, primal);
            for (l, fd) in ctx.facets.iter().enumerate() {
                let hat = if physics == Physics::Velocity { Field::UHat(l) } else { Field::THat(l) };
                let mut uh = out.zeros(primal, hat);
                let mut hh = out.zeros(hat, hat);
                for p in &fd.points {
                    let w = coef * p.w;
                    for c in 0..comps {
                        for a in 0..nk {
                            for b in 0..nk {
                                uu[(c * nk + a, c * nk + b)] += w * p.phi[a] * p.phi[b];
                            }
                            for m in 0..mf {
                                uh[(c * nk + a, c * mf + m)] -= w * p.phi[a] * p.psi[m];
                            }
                        }
                        for m in 0..mf {
                            for s in 0..mf {
                                hh[(c * mf + m, c * mf + s)] += w * p.psi[m] * p.psi[s];
                            }
                        }
                    }
                }
                out.push_pair(form, primal, hat, uh, 1.0);
                out.push(form, hat, hat, hh);
            }
            out.push(form, primal, primal, uu);
        }
        Physics::Magnetic => {
            let coef = ctx.tau;
            let mut bb = out.zeros(Field::B, Field::B);
            for (l, fd) in ctx.facets.iter().enumerate() {
                let hat = Field::BHat(l);
                let ne: Vec<[f64; 3]> = (0..d).map(|c| cross(d, &fd.normal, &unit(c))).collect();
                let nt: Vec<[f64; 3]> = (0..d).map(|t| cross(d, &fd.normal, &fd.frame[t])).collect();
                let mut bh = out.zeros(Field::B, hat);
                let mut hh = out.zeros(hat, hat);
                for p in &fd.points {
                    let w = coef * p.w;
                    for c in 0..d {
                        for c2 in 0..d {
                            let s = w * dot(3, &ne[c], &ne[c2]);
                            if s != 0.0 {
                                for a in 0..nk {
                                    for b in 0..nk {
                                        bb[(c * nk + a, c2 * nk + b)] += s * p.phi[a] * p.phi[b];
                                    }
                                }
                            }
                        }
                        for t in 0..d {
                            let s = w * dot(3, &ne[c], &nt[t]);
                            for a in 0..nk {
                                for m in 0..mf {
                                    bh[(c * nk + a, t * mf + m)] -= s * p.phi[a] * p.psi[m];
                                }
                            }
                        }
                    }
                    for t in 0..d {
                        for t2 in 0..d {
                            let s = w * dot(3, &nt[t], &nt[t2]);
                            for m in 0..mf {
                                for r in 0..mf {
                                    hh[(t * mf + m, t2 * mf + r)] += s * p.psi[m] * p.psi[r];
                                }
                            }
                        }
                    }
                }
                out.push_pair(Form::MagneticStabilization, Field::B, hat, bh, 1.0);
                out.push(Form::MagneticStabilization, hat, hat, hh);
            }
            out.push(Form::MagneticStabilization, Field::B, Field::B, bb);
        }
    }
    out
}

/// `b(V, Q) = -(div v, q) + <v.n, q^>` in the primal rows and `-b(U, Q)` in
/// the multiplier rows, scaled by `1/Rm` for the pseudo-pressure.
pub fn local_constraint_block(kind: ConstraintKind, ctx: &ElementContext, params: &PhysicalParameters) -> LocalBlocks {
    let mut out = ctx.blocks();
    let (d, n1, nk, mf) = (ctx.dim, ctx.n1, ctx.nk, ctx.mf);
    let (primal, mult, coef, form) = match kind {
        ConstraintKind::Pressure => (Field::U, Field::P, 1.0, Form::Pressure),
        ConstraintKind::PseudoPressure => (Field::B, Field::R, 1.0 / params.rm, Form::PseudoPressure),
    };
    let mut up = out.zeros(primal, mult);
    for q in &ctx.points {
        for c in 0..d {
            for a in 0..nk {
                let g = coef * q.w * q.grad[a][c];
                for b in 0..n1 {
                    up[(c * nk + a, b)] -= g * q.phi[b];
                }
            }
        }
    }
    out.push_pair(form, primal, mult, up, -1.0);
    for (l, fd) in ctx.facets.iter().enumerate() {
        let hat = match kind {
            ConstraintKind::Pressure => Field::PHat(l),
            ConstraintKind::PseudoPressure => Field::RHat(l),
        };
        let mut uh = out.zeros(primal, hat);
        for p in &fd.points {
            for c in 0..d {
                let wn = coef * p.w * fd.normal[c];
                for a in 0..nk {
                    for m in 0..mf {
                        uh[(c * nk + a, m)] += wn * p.phi[a] * p.psi[m];
                    }
                }
            }
        }
        out.push_pair(form, primal, hat, uh, -1.0);
    }
    out
}

/// Oseen-linearised trilinear terms with the previous iterate as the
/// advecting field:
///
/// - `c_1h(U0; U, V)` in the momentum rows,
/// - `c_2h(V; B0, B)` in the momentum rows,
/// - `-c_2h(U0; B, W)` in the induction rows,
/// - `c_3h(U0; T, Z)` in the energy rows.
///
/// `ctx` should carry a rule of order `3k + 2`.
pub fn local_convection_blocks(prev: &PrevIterate<'_>, ctx: &ElementContext, params: &PhysicalParameters) -> LocalBlocks {
    let mut out = ctx.blocks();
    let (d, nk, mf) = (ctx.dim, ctx.nk, ctx.mf);
    let f1 = 1.0 / (2.0 * params.n);
    let f2 = 1.0 / params.rm;
    let f3 = 0.5;
    let mut uu = out.zeros(Field::U, Field::U);
    let mut ub = out.zeros(Field::U, Field::B);
    let mut bb = out.zeros(Field::B, Field::B);
    let mut tt = out.zeros(Field::T, Field::T);
    let zero = [[0.0; 3]; 3];
    for q in &ctx.points {
        let phi_u = vector_value(d, prev.u, &q.phi);
        let b0 = vector_value(d, prev.b, &q.phi);
        let jb0 = vector_jacobian(d, prev.b, &q.grad);
        let ju0 = vector_jacobian(d, prev.u, &q.grad);
        let adv: Vec<f64> = q.grad.iter().map(|g| dot(d, &phi_u, g)).collect();
        // Skew-symmetric advection matrix, shared by velocity components and T.
        for a in 0..nk {
            for b in 0..nk {
                let s = q.w * (q.phi[a] * adv[b] - adv[a] * q.phi[b]);
                if s == 0.0 {
                    continue;
                }
                for c in 0..d {
                    uu[(c * nk + a, c * nk + b)] += f1 * s;
                }
                tt[(a, b)] += f3 * s;
            }
        }
        for c in 0..d {
            for a in 0..nk {
                let ec = unit(c);
                let mut va = [0.0; 3];
                va[c] = q.phi[a];
                let mut jva = zero;
                jva[c] = q.grad[a];
                // Momentum: (B, curl(v x B0)) with v = phi_a e_c.
                let cv = curl_of_cross(d, &va, &jva, &b0, &jb0);
                for c2 in 0..d {
                    for b in 0..nk {
                        ub[(c * nk + a, c2 * nk + b)] += f2 * q.w * cv[c2] * q.phi[b];
                    }
                }
                // Induction: -(w, curl(u0 x B)) with w = phi_a e_c, B = phi_b e_c2.
                for c2 in 0..d {
                    for b in 0..nk {
                        let mut vb = [0.0; 3];
                        vb[c2] = q.phi[b];
                        let mut jvb = zero;
                        jvb[c2] = q.grad[b];
                        let cu = curl_of_cross(d, &phi_u, &ju0, &vb, &jvb);
                        bb[(c * nk + a, c2 * nk + b)] -= f2 * q.w * dot(d, &ec, &cu) * q.phi[a];
                    }
                }
            }
        }
    }
    out.push(Form::Convection, Field::U, Field::U, uu);
    out.push(Form::LorentzInduction, Field::U, Field::B, ub);
    out.push(Form::LorentzInduction, Field::B, Field::B, bb);
    out.push(Form::ThermalConvection, Field::T, Field::T, tt);

    for (l, fd) in ctx.facets.iter().enumerate() {
        let mut u_uh = out.zeros(Field::U, Field::UHat(l));
        let mut uh_u = out.zeros(Field::UHat(l), Field::U);
        let mut u_bh = out.zeros(Field::U, Field::BHat(l));
        let mut bh_b = out.zeros(Field::BHat(l), Field::B);
        let mut t_th = out.zeros(Field::T, Field::THat(l));
        let mut th_t = out.zeros(Field::THat(l), Field::T);
        let nt: Vec<[f64; 3]> = (0..d).map(|t| cross(d, &fd.normal, &fd.frame[t])).collect();
        for p in &fd.points {
            let u0 = vector_value(d, prev.u, &p.phi);
            let b0 = vector_value(d, prev.b, &p.phi);
            let uh0 = vector_value(d, prev.u_hat[l], &p.psi);
            let flow = p.w * dot(d, &uh0, &fd.normal);
            for a in 0..nk {
                for m in 0..mf {
                    let s = flow * p.phi[a] * p.psi[m];
                    for c in 0..d {
                        u_uh[(c * nk + a, c * mf + m)] += f1 * s;
                        uh_u[(c * mf + m, c * nk + a)] -= f1 * s;
                    }
                    t_th[(a, m)] += f3 * s;
                    th_t[(m, a)] -= f3 * s;
                }
            }
            for c in 0..d {
                for a in 0..nk {
                    let mut va = [0.0; 3];
                    va[c] = p.phi[a];
                    // Momentum facet term <v x B0, n x B^>.
                    let vxb = cross(d, &va, &b0);
                    // Induction facet term -<u0 x B, n x w^> with B = phi_a e_c.
                    let uxb = cross(d, &u0, &va);
                    for t in 0..d {
                        let s1 = f2 * p.w * dot(3, &vxb, &nt[t]);
                        let s2 = f2 * p.w * dot(3, &uxb, &nt[t]);
                        for m in 0..mf {
                            u_bh[(c * nk + a, t * mf + m)] += s1 * p.psi[m];
                            bh_b[(t * mf + m, c * nk + a)] -= s2 * p.psi[m];
                        }
                    }
                }
            }
        }
        out.push(Form::Convection, Field::U, Field::UHat(l), u_uh);
        out.push(Form::Convection, Field::UHat(l), Field::U, uh_u);
        out.push(Form::LorentzInduction, Field::U, Field::BHat(l), u_bh);
        out.push(Form::LorentzInduction, Field::BHat(l), Field::B, bh_b);
        out.push(Form::ThermalConvection, Field::T, Field::THat(l), t_th);
        out.push(Form::ThermalConvection, Field::THat(l), Field::T, th_t);
    }
    out
}

/// `(Gr / (N Re^2)) (g/|g| T, v)` in the momentum rows.
pub fn local_buoyancy_block(ctx: &ElementContext, params: &PhysicalParameters) -> LocalBlocks {
    let mut out = ctx.blocks();
    let (d, nk) = (ctx.dim, ctx.nk);
    let g = params.gravity_unit();
    let coef = params.buoyancy_coefficient();
    let mut ut = out.zeros(Field::U, Field::T);
    for q in &ctx.points {
        for c in 0..d {
            if g[c] == 0.0 {
                continue;
            }
            for a in 0..nk {
                for b in 0..nk {
                    ut[(c * nk + a, b)] += coef * g[c] * q.w * q.phi[a] * q.phi[b];
                }
            }
        }
    }
    out.push(Form::Buoyancy, Field::U, Field::T, ut);
    out
}

/// `(f1, v)`, `(1/Rm)(f2, w)` and `(f3, z)`.
pub fn local_load(ctx: &ElementContext, data: &dyn ProblemData, params: &PhysicalParameters) -> LocalBlocks {
    let mut out = ctx.blocks();
    let (d, nk) = (ctx.dim, ctx.nk);
    let mut lu = DVector::zeros(d * nk);
    let mut lb = DVector::zeros(d * nk);
    let mut lt = DVector::zeros(nk);
    for q in &ctx.points {
        let s = data.source(&q.x);
        for a in 0..nk {
            let wp = q.w * q.phi[a];
            for c in 0..d {
                lu[c * nk + a] += wp * s.f1[c];
                lb[c * nk + a] += wp * s.f2[c] / params.rm;
            }
            lt[a] += wp * s.f3;
        }
    }
    out.push_load(Form::Load, Field::U, lu);
    out.push_load(Form::Load, Field::B, lb);
    out.push_load(Form::Load, Field::T, lt);
    out
}
