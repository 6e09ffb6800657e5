//! The twistor chart Z = U × S² in stereographic coordinates, the so(3)
//! connection form, horizontal lifts, the generalized almost complex
//! structure on TM ⊕ T*M of Z, and direct Courant-bracket evaluations of its
//! Nijenhuis tensor for cross-validating the integrability criterion.

use nalgebra::{DMatrix, DVector};

use crate::catalog::StructureBundle;
use crate::connections::{BracketVariant, GConnection};
use crate::courant::GSection;
use crate::error::{GeoError, Result};
use crate::expr::{EvalCtx, ScalarField};
use crate::field::{CovectorField, MatrixField, VectorField};
use crate::integrability::{nijenhuis_generalized, type_condition_residual};
use crate::report::{ResidualReport, Witness};
use crate::sample::{Orientation, SamplePlan};
use crate::structures::QuatFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    /// Chart covering S² minus (0,0,−1): n = (2s, 2t, 1−s²−t²)/(1+s²+t²).
    North,
    /// Chart covering S² minus (0,0,1): n = (2s, 2t, s²+t²−1)/(1+s²+t²).
    South,
}

/// The so(3) connection form of a Q-preserving connection with respect to an
/// admissible frame: ∇𝓘 = γ𝓙 − β𝓚, ∇𝓙 = −γ𝓘 + α𝓚, ∇𝓚 = β𝓘 − α𝓙. Stored as
/// one (α, β, γ) triple per coordinate direction.
#[derive(Debug, Clone)]
pub struct ConnectionForm {
    /// w[i] = (α_i, β_i, γ_i).
    pub w: Vec<[ScalarField; 3]>,
}

/// Coefficients of an endomorphism in the frame span, by trace projection:
/// for A = a𝓘 + b𝓙 + c𝓚, a = −tr(𝓘A)/(2m) (and cyclically), since the frame
/// elements square to −1 and have traceless products.
pub fn frame_coefficients(
    frame_vals: &[DMatrix<f64>; 3],
    a: &DMatrix<f64>,
) -> ([f64; 3], f64) {
    let n = a.nrows() as f64;
    let coeff = |s: &DMatrix<f64>| -> f64 { -(s * a).trace() / n };
    let c = [coeff(&frame_vals[0]), coeff(&frame_vals[1]), coeff(&frame_vals[2])];
    let recon = &frame_vals[0] * c[0] + &frame_vals[1] * c[1] + &frame_vals[2] * c[2];
    let off = (a - recon).amax();
    (c, off)
}

/// Extract the connection form of ∇ with respect to the frame, with the
/// worst off-span residual over the given points (the applicability signal).
pub fn connection_form(
    conn: &GConnection,
    frame: &QuatFrame,
    points: &[Vec<f64>],
) -> Result<(ConnectionForm, f64)> {
    let m = conn.dim();
    let two_m = ScalarField::constant(2.0 * m as f64);
    let mut w = Vec::with_capacity(m);
    for i in 0..m {
        let di = conn.nabla_endo(&frame.i, i);
        let dj = conn.nabla_endo(&frame.j, i);
        // coefficient of τ in A ∈ span{𝓘,𝓙,𝓚} is −tr(τA)/(2m); the pattern
        // ∇𝓘 = γ𝓙 − β𝓚, ∇𝓙 = −γ𝓘 + α𝓚 gives
        let alpha = -&(&frame.k.matmul(&dj).trace() / &two_m);
        let beta = &frame.k.matmul(&di).trace() / &two_m;
        let gamma = -&(&frame.j.matmul(&di).trace() / &two_m);
        w.push([alpha, beta, gamma]);
    }
    let form = ConnectionForm { w };
    // applicability + reconstruction residual
    let mut worst: f64 = 0.0;
    for p in points {
        let mut ctx = EvalCtx::new(m, p);
        let fr = [
            frame.i.eval(&mut ctx)?,
            frame.j.eval(&mut ctx)?,
            frame.k.eval(&mut ctx)?,
        ];
        for i in 0..m {
            for sigma in 0..3 {
                let d = conn.nabla_endo(frame.element(sigma), i).eval(&mut ctx)?;
                let (_, off) = frame_coefficients(&fr, &d);
                worst = worst.max(off / (1.0 + d.amax()));
                // reconstruction from the extracted form
                let a = ctx.value(&form.w[i][0])?;
                let b = ctx.value(&form.w[i][1])?;
                let g = ctx.value(&form.w[i][2])?;
                let recon: DMatrix<f64> = match sigma {
                    0 => &fr[1] * g - &fr[2] * b,
                    1 => &fr[0] * (-g) + &fr[2] * a,
                    _ => &fr[0] * b - &fr[1] * a,
                };
                worst = worst.max((d - recon).amax() / (1.0 + a.abs() + b.abs() + g.abs()));
            }
        }
    }
    Ok((form, worst))
}

/// Everything needed to evaluate twistor-level residuals on one stereographic
/// chart of the fiber sphere.
pub struct TwistorSetup {
    pub base_dim: usize,
    pub pole: Pole,
    pub orientation: Orientation,
    /// Sphere embedding n(s,t) as fields on the (m+2)-chart (s,t are the last
    /// two coordinates).
    pub embed: [ScalarField; 3],
    dn_inv: [[ScalarField; 3]; 2],
    /// Chart components of the lift correction for each base direction:
    /// lift(∂_i) = ∂_i + V_i·(∂_s, ∂_t) with V_i = −dn⁻¹(w_i × n).
    pub lift_corr: Vec<[ScalarField; 2]>,
    /// Basis change from splitting coordinates [ℋ, ℋ*, 𝒱, 𝒱*] to chart
    /// coordinates, and its inverse.
    pub phi: MatrixField,
    pub phi_inv: MatrixField,
    /// The generalized almost complex structure in chart coordinates.
    pub j_field: MatrixField,
    /// Max off-span residual of ∇ on the frame (applicability signal).
    pub q_residual: f64,
    pub form: ConnectionForm,
}

fn cross_matrix(n: &[ScalarField; 3]) -> MatrixField {
    let z = ScalarField::zero;
    MatrixField::from_fn(3, 3, |r, c| match (r, c) {
        (0, 1) => -&n[2],
        (0, 2) => n[1].clone(),
        (1, 0) => n[2].clone(),
        (1, 2) => -&n[0],
        (2, 0) => -&n[1],
        (2, 1) => n[0].clone(),
        _ => z(),
    })
}

impl TwistorSetup {
    pub fn total_dim(&self) -> usize {
        self.base_dim + 2
    }

    /// Build the setup for one pole chart. Errors if the connection does not
    /// preserve the frame span (the construction is then inapplicable).
    pub fn build(
        bundle: &StructureBundle,
        pole: Pole,
        orientation: Orientation,
        plan: &SamplePlan,
    ) -> Result<TwistorSetup> {
        let frame = bundle
            .frame
            .as_ref()
            .ok_or_else(|| GeoError::Invalid("structure has no quaternionic frame".into()))?;
        let conn = &bundle.connection;
        let m = conn.dim();
        let points = plan.base_points(&bundle.chart);
        let (form, q_residual) = connection_form(conn, frame, &points)?;
        if q_residual > 1e-7 {
            return Err(GeoError::Invalid(format!(
                "connection does not preserve the quaternionic span (residual {q_residual:.3e}); twistor construction inapplicable"
            )));
        }

        let s = ScalarField::coord(m);
        let t = ScalarField::coord(m + 1);
        let q = ScalarField::one() + s.powi(2) + t.powi(2);
        let two = ScalarField::constant(2.0);
        let third = match pole {
            Pole::North => ScalarField::one() - s.powi(2) - t.powi(2),
            Pole::South => s.powi(2) + t.powi(2) - ScalarField::one(),
        };
        let embed = [&(&two * &s) / &q, &(&two * &t) / &q, &third / &q];
        // dn columns ∂n/∂s, ∂n/∂t; stereographic conformality gives
        // dnᵀ dn = λ² I with λ = 2/q, so dn⁻¹ = (q²/4) dnᵀ
        let dn: Vec<[ScalarField; 2]> =
            embed.iter().map(|e| [e.deriv(m), e.deriv(m + 1)]).collect();
        let q2_over4 = &(&q * &q) / &ScalarField::constant(4.0);
        let dn_inv = [
            [
                &dn[0][0] * &q2_over4,
                &dn[1][0] * &q2_over4,
                &dn[2][0] * &q2_over4,
            ],
            [
                &dn[0][1] * &q2_over4,
                &dn[1][1] * &q2_over4,
                &dn[2][1] * &q2_over4,
            ],
        ];
        // lift correction V_i = −dn⁻¹(w_i × n)
        let nxw = |wv: &[ScalarField; 3]| -> [ScalarField; 3] {
            // w × n
            [
                &(&wv[1] * &embed[2]) - &(&wv[2] * &embed[1]),
                &(&wv[2] * &embed[0]) - &(&wv[0] * &embed[2]),
                &(&wv[0] * &embed[1]) - &(&wv[1] * &embed[0]),
            ]
        };
        let lift_corr: Vec<[ScalarField; 2]> = (0..m)
            .map(|i| {
                let wxn = nxw(&form.w[i]);
                let comp = |r: usize| {
                    -&((0..3)
                        .map(|a| &dn_inv[r][a] * &wxn[a])
                        .fold(ScalarField::zero(), |acc, x| &acc + &x))
                };
                [comp(0), comp(1)]
            })
            .collect();

        let d = m + 2; // chart dimension
        let n2 = 2 * d; // generalized fiber dimension (= 12 for m = 4)
        // Φ columns: ℋ_0..m-1, ℋ*_0..m-1, 𝒱_s, 𝒱_t, 𝒱*_s, 𝒱*_t
        let mut phi = MatrixField::zeros(n2, n2);
        let mut phi_inv = MatrixField::zeros(n2, n2);
        for i in 0..m {
            // ℋ_i: tangent base e_i + fiber correction
            *phi.at_mut(i, i) = ScalarField::one();
            *phi.at_mut(m, i) = lift_corr[i][0].clone();
            *phi.at_mut(m + 1, i) = lift_corr[i][1].clone();
            // ℋ*_i: cotangent base e_i
            *phi.at_mut(d + i, m + i) = ScalarField::one();
            // Φ⁻¹ rows: ℋ-coords = v_base
            *phi_inv.at_mut(i, i) = ScalarField::one();
            // ℋ*-coords: ξ_i = μ_base,i + Σ_a μ_fib,a V_i[a]
            *phi_inv.at_mut(m + i, d + i) = ScalarField::one();
            *phi_inv.at_mut(m + i, d + m) = lift_corr[i][0].clone();
            *phi_inv.at_mut(m + i, d + m + 1) = lift_corr[i][1].clone();
        }
        for a in 0..2 {
            // 𝒱_a: fiber tangent
            *phi.at_mut(m + a, 2 * m + a) = ScalarField::one();
            // 𝒱*_a: fiber cotangent + base corrections −V_i[a] dx^i
            *phi.at_mut(d + m + a, 2 * m + 2 + a) = ScalarField::one();
            for i in 0..m {
                *phi.at_mut(d + i, 2 * m + 2 + a) = -&lift_corr[i][a];
            }
            // Φ⁻¹: 𝒱-coords = v_fib − Σ_i v_base,i V_i[a]
            *phi_inv.at_mut(2 * m + a, m + a) = ScalarField::one();
            for i in 0..m {
                *phi_inv.at_mut(2 * m + a, i) = -&lift_corr[i][a];
            }
            // 𝒱*-coords = μ_fib
            *phi_inv.at_mut(2 * m + 2 + a, d + m + a) = ScalarField::one();
        }

        // middle block: u on [ℋ,ℋ*]-coords, J_V on 𝒱, −J_Vᵀ on 𝒱*
        let u_field = frame
            .i
            .scale(&embed[0])
            .add(&frame.j.scale(&embed[1]))
            .add(&frame.k.scale(&embed[2]));
        let dn_field = MatrixField::from_fn(3, 2, |r, c| dn[r][c].clone());
        let dn_inv_field = MatrixField::from_fn(2, 3, |r, c| dn_inv[r][c].clone());
        let j_v = dn_inv_field.matmul(&cross_matrix(&embed)).matmul(&dn_field);
        let mut middle = MatrixField::zeros(n2, n2);
        for r in 0..2 * m {
            for c in 0..2 * m {
                *middle.at_mut(r, c) = u_field.at(r, c).clone();
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                *middle.at_mut(2 * m + r, 2 * m + c) = j_v.at(r, c).clone();
                *middle.at_mut(2 * m + 2 + r, 2 * m + 2 + c) = -j_v.at(c, r);
            }
        }
        let mut j_field = phi.matmul(&middle).matmul(&phi_inv);
        if orientation == Orientation::Left {
            j_field = j_field.neg();
        }

        Ok(TwistorSetup {
            base_dim: m,
            pole,
            orientation,
            embed,
            dn_inv,
            lift_corr,
            phi,
            phi_inv,
            j_field,
            q_residual,
            form,
        })
    }

    /// Stereographic coordinates of a fiber point in this chart, or None if
    /// it is too close to the excluded pole.
    pub fn chart_coords(&self, abc: [f64; 3]) -> Option<[f64; 2]> {
        let denom = match self.pole {
            Pole::North => 1.0 + abc[2],
            Pole::South => 1.0 - abc[2],
        };
        if denom < 0.2 {
            return None;
        }
        Some([abc[0] / denom, abc[1] / denom])
    }

    pub fn point6(&self, base: &[f64], st: [f64; 2]) -> Vec<f64> {
        let mut p = base.to_vec();
        p.push(st[0]);
        p.push(st[1]);
        p
    }

    /// Horizontal lift of the a-th generalized coordinate frame section of
    /// the base (a < 2m), as a section on the twistor chart.
    pub fn lift_frame(&self, a: usize) -> GSection {
        self.column_section(a)
    }

    /// Vertical coordinate field ∂_s (a = 0) or ∂_t (a = 1).
    pub fn vertical(&self, a: usize) -> GSection {
        self.column_section(2 * self.base_dim + a)
    }

    /// Vertical 1-form basis: the covectors dual to (∂_s, ∂_t) vanishing on ℋ.
    pub fn vstar(&self, a: usize) -> GSection {
        self.column_section(2 * self.base_dim + 2 + a)
    }

    fn column_section(&self, col: usize) -> GSection {
        let d = self.total_dim();
        GSection::new(
            VectorField { comps: (0..d).map(|r| self.phi.at(r, col).clone()).collect() },
            CovectorField { comps: (0..d).map(|r| self.phi.at(d + r, col).clone()).collect() },
        )
    }

    /// Lift of a general base section (componentwise through Φ).
    pub fn lift_section(&self, s: &GSection) -> GSection {
        let m = self.base_dim;
        let d = self.total_dim();
        let mut vec = VectorField::zero(d);
        let mut form = CovectorField::zero(d);
        for i in 0..m {
            for r in 0..d {
                vec.comps[r] = &vec.comps[r] + &(self.phi.at(r, i) * &s.vec.comps[i]);
                form.comps[r] = &form.comps[r] + &(self.phi.at(d + r, i) * &s.vec.comps[i]);
            }
            for r in 0..d {
                vec.comps[r] = &vec.comps[r] + &(self.phi.at(r, m + i) * &s.form.comps[i]);
                form.comps[r] = &form.comps[r] + &(self.phi.at(d + r, m + i) * &s.form.comps[i]);
            }
        }
        GSection::new(vec, form)
    }

    /// Splitting coordinates of a section value at a point: [ℋ(m), ℋ*(m),
    /// 𝒱(2), 𝒱*(2)].
    pub fn split_components(&self, ctx: &mut EvalCtx, s: &GSection) -> Result<DVector<f64>> {
        let v = s.eval(ctx)?;
        let p = self.phi_inv.eval(ctx)?;
        Ok(&p * &v)
    }

    /// Chart components of a Q-vector (frame coefficients r) as a vertical
    /// tangent at the current fiber point: dn⁻¹ r.
    pub fn vert_from_q(&self, ctx: &mut EvalCtx, r: [f64; 3]) -> Result<[f64; 2]> {
        let mut out = [0.0; 2];
        for (row, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..3 {
                acc += ctx.value(&self.dn_inv[row][a])? * r[a];
            }
            *slot = acc;
        }
        Ok(out)
    }
}

/// Sign convention resolved by a comparison: value and which scaling matched.
fn best_match(lhs: f64, rhs: f64) -> (f64, &'static str) {
    let direct = (lhs - rhs).abs();
    let halved = (lhs - 0.5 * rhs).abs();
    let doubled = (lhs - 2.0 * rhs).abs();
    if direct <= halved && direct <= doubled {
        (direct, "1")
    } else if halved <= doubled {
        (halved, "1/2")
    } else {
        (doubled, "2")
    }
}
const _: fn(f64, f64) -> (f64, &'static str) = best_match;

/// The C2 combination (ℛ(𝒳∧𝒴 − u𝒳∧u𝒴) + uℛ(u𝒳∧𝒴 + 𝒳∧u𝒴)) for generalized
/// frame indices (a, b) from precomputed curvature matrices.
pub fn c2_combination(
    r: &[Vec<DMatrix<f64>>],
    m: usize,
    u: &DMatrix<f64>,
    a: usize,
    b: usize,
) -> DMatrix<f64> {
    let n = 2 * m;
    let e = DMatrix::<f64>::identity(n, n);
    let r_of = |x: &DVector<f64>, y: &DVector<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        for i in 0..m {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                if y[j] == 0.0 || i == j {
                    continue;
                }
                out += &r[i][j] * (x[i] * y[j]);
            }
        }
        out
    };
    let x = e.column(a).into_owned();
    let y = e.column(b).into_owned();
    let ux = u.column(a).into_owned();
    let uy = u.column(b).into_owned();
    r_of(&x, &y) - r_of(&ux, &uy) + u * (r_of(&ux, &y) + r_of(&x, &uy))
}

/// All residuals of the direct twistor Nijenhuis evaluation, block by block,
/// with the closed-form comparisons.
pub struct TwistorReports {
    pub structure_valid: ResidualReport,
    pub prop9: ResidualReport,
    pub prop10: ResidualReport,
    pub corollary1: ResidualReport,
    pub corollary2: ResidualReport,
    pub corollary3_vertical: ResidualReport,
    pub corollary3_horizontal: ResidualReport,
    /// Max direct Nijenhuis residual over all blocks (the integrability
    /// measure itself).
    pub direct: ResidualReport,
    /// Which torsion bracket variant matched the horizontal block.
    pub matched_variant: BracketVariant,
}

/// One evaluation site on the twistor space.
pub struct FiberSite {
    pub base: Vec<f64>,
    pub abc: [f64; 3],
    pub st: [f64; 2],
}

/// Assign each (base point, sphere point) to a pole chart and list the sites.
pub fn sites(
    setup_north: &TwistorSetup,
    plan: &SamplePlan,
    base_points: &[Vec<f64>],
) -> Vec<(Pole, FiberSite)> {
    let mut out = Vec::new();
    for p in base_points {
        for abc in plan.sphere_points() {
            let pole = if abc[2] > -0.5 { Pole::North } else { Pole::South };
            let st = match pole {
                Pole::North => setup_north.chart_coords(abc).unwrap(),
                Pole::South => [abc[0] / (1.0 - abc[2]), abc[1] / (1.0 - abc[2])],
            };
            out.push((pole, FiberSite { base: p.clone(), abc, st }));
        }
    }
    out
}
