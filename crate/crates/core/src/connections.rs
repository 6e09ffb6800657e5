//! Classical and generalized connections: Levi-Civita, Bismut with skew
//! torsion, arbitrary connections on TM ⊕ T*M with their Gualtieri torsion
//! and curvature, and the generalized Bismut connection (bracket route and
//! explicit matrix route).

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::Chart;
use crate::courant::{courant_bracket, lie_bracket, pairing, GSection};
use crate::error::{GeoError, Result};
use crate::expr::{EvalCtx, ScalarField};
use crate::field::{CovectorField, MatrixField, VectorField};
use crate::forms::KForm;
use crate::structures::GeneralizedMetric;

/// An affine connection on TM given by coefficient fields, with
/// `gamma[i][(k,j)] = Γ^k_{ij}`.
#[derive(Debug, Clone)]
pub struct AffineConnection {
    pub chart: Chart,
    pub gamma: Vec<MatrixField>,
}

impl AffineConnection {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn flat(chart: Chart) -> Self {
        let m = chart.dim();
        AffineConnection { chart, gamma: vec![MatrixField::zeros(m, m); m] }
    }

    /// ∇_X Y with both arguments as fields.
    pub fn apply(&self, x: &VectorField, y: &VectorField) -> VectorField {
        let m = self.dim();
        let mut out = VectorField::zero(m);
        for i in 0..m {
            let dy = VectorField { comps: y.comps.iter().map(|c| c.deriv(i)).collect() };
            let term = dy.add(&self.gamma[i].apply_vector(y)).scale(&x.comps[i]);
            out = out.add(&term);
        }
        out
    }

    /// Covariant derivative of the metric: (∇_{∂_i} g)(Y,Z) as a matrix field.
    pub fn nabla_g(&self, g: &MatrixField, i: usize) -> MatrixField {
        // ∂_i g - g Γ_i - Γ_iᵀ g
        g.deriv(i).sub(&g.matmul(&self.gamma[i])).sub(&self.gamma[i].transpose().matmul(g))
    }

    /// Covariant derivative of an endomorphism of TM: ∂_i E + [Γ_i, E].
    pub fn nabla_endo(&self, e: &MatrixField, i: usize) -> MatrixField {
        e.deriv(i).add(&self.gamma[i].commutator(e))
    }
}

/// Levi-Civita connection from the Koszul formula.
pub fn levi_civita(metric: &GeneralizedMetric) -> AffineConnection {
    let m = metric.dim();
    let g = &metric.g;
    let gi = &metric.g_inv;
    let half = ScalarField::constant(0.5);
    let gamma = (0..m)
        .map(|i| {
            MatrixField::from_fn(m, m, |k, j| {
                let mut acc = ScalarField::zero();
                for l in 0..m {
                    let sym = &(&g.at(j, l).deriv(i) + &g.at(i, l).deriv(j)) - &g.at(i, j).deriv(l);
                    acc = &acc + &(gi.at(k, l) * &sym);
                }
                &acc * &half
            })
        })
        .collect();
    AffineConnection { chart: metric.chart.clone(), gamma }
}

/// Classical connection with totally skew torsion: coefficients
/// Γ_i ± ½ g⁻¹ T̂_i, where (T̂_i)_{kj} = T(∂_i, ∂_j, ∂_k).
pub fn with_skew_torsion(metric: &GeneralizedMetric, t: &KForm, sign: f64) -> AffineConnection {
    let m = metric.dim();
    let lc = levi_civita(metric);
    let half = ScalarField::constant(0.5 * sign);
    let gamma = (0..m)
        .map(|i| {
            let t_hat = MatrixField::from_fn(m, m, |k, j| t.coeff(&[i, j, k]));
            lc.gamma[i].add(&metric.g_inv.matmul(&t_hat).scale(&half))
        })
        .collect();
    AffineConnection { chart: metric.chart.clone(), gamma }
}

/// Classical Nijenhuis tensor of an almost complex structure, on vector
/// fields: N(X,Y) = [JX,JY] − J[JX,Y] − J[X,JY] − [X,Y].
pub fn classical_nijenhuis(j: &MatrixField, x: &VectorField, y: &VectorField) -> VectorField {
    let jx = j.apply_vector(x);
    let jy = j.apply_vector(y);
    let t1 = lie_bracket(&jx, &jy);
    let t2 = j.apply_vector(&lie_bracket(&jx, y));
    let t3 = j.apply_vector(&lie_bracket(x, &jy));
    let t4 = lie_bracket(x, y);
    t1.sub(&t2).sub(&t3).sub(&t4)
}

/// Max classical Nijenhuis residual over coordinate pairs and points.
pub fn classical_nijenhuis_residual(
    dim: usize,
    j: &MatrixField,
    points: &[Vec<f64>],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let mut ctx = EvalCtx::new(dim, p);
        let scale = 1.0 + j.eval(&mut ctx)?.amax();
        for a in 0..dim {
            for b in (a + 1)..dim {
                let n = classical_nijenhuis(j, &VectorField::basis(dim, a), &VectorField::basis(dim, b));
                worst = worst.max(n.eval(&mut ctx)?.amax() / scale);
            }
        }
    }
    Ok(worst)
}

/// The unique Hermitian connection with totally skew torsion T = I dω,
/// returned with its torsion form. The precondition (I integrable and
/// g-hermitian) is spot-checked.
pub fn bismut_classical(
    metric: &GeneralizedMetric,
    i_str: &MatrixField,
) -> Result<(AffineConnection, KForm)> {
    let m = metric.dim();
    let omega = crate::structures::hermitian_form(&metric.chart, &metric.g, i_str)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xB15);
    let pts: Vec<Vec<f64>> = (0..4).map(|_| metric.chart.sample(&mut rng)).collect();
    let nij = classical_nijenhuis_residual(m, i_str, &pts)?;
    if nij > 1e-8 {
        return Err(GeoError::Invalid(format!(
            "almost complex structure is not integrable (Nijenhuis residual {nij:.3e})"
        )));
    }
    let t = omega.d()?.apply_endo(i_str);
    Ok((with_skew_torsion(metric, &t, 1.0), t))
}

/// Which bracket enters the Gualtieri torsion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketVariant {
    Untwisted,
    /// Use the connection's declared twist h in the bracket.
    Twisted,
}

/// A generalized connection on TM ⊕ T*M: D_{∂_i} s = ∂_i s + A_i s, extended
/// to all of TM ⊕ T*M by D_𝒳 = D_{π(𝒳)}.
#[derive(Debug, Clone)]
pub struct GConnection {
    pub chart: Chart,
    /// One 2m×2m coefficient matrix per coordinate direction.
    pub coeffs: Vec<MatrixField>,
    /// The closed 3-form the connection is declared twisted by, if any.
    pub twist: Option<KForm>,
}

impl GConnection {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn flat(chart: Chart) -> Self {
        let m = chart.dim();
        GConnection { chart, coeffs: vec![MatrixField::zeros(2 * m, 2 * m); m], twist: None }
    }

    /// D along the coordinate direction ∂_i.
    pub fn apply_direction(&self, i: usize, s: &GSection) -> GSection {
        let ds = GSection::new(
            VectorField { comps: s.vec.comps.iter().map(|c| c.deriv(i)).collect() },
            CovectorField { comps: s.form.comps.iter().map(|c| c.deriv(i)).collect() },
        );
        ds.add(&s.apply_endo(&self.coeffs[i]))
    }

    /// D_X s for a vector field X.
    pub fn apply(&self, x: &VectorField, s: &GSection) -> GSection {
        let m = self.dim();
        let mut out = GSection::zero(m);
        for i in 0..m {
            out = out.add(&self.apply_direction(i, s).scale(&x.comps[i]));
        }
        out
    }

    /// D_𝒲 s for a generalized direction (only the vector part acts).
    pub fn apply_gsection(&self, w: &GSection, s: &GSection) -> GSection {
        self.apply(&w.vec, s)
    }

    /// Covariant derivative of an endomorphism: ∂_i E + [A_i, E].
    pub fn nabla_endo(&self, e: &MatrixField, i: usize) -> MatrixField {
        e.deriv(i).add(&self.coeffs[i].commutator(e))
    }

    /// Extend an affine connection by duality: blockdiag(Γ_i, −Γ_iᵀ).
    pub fn extend(aff: &AffineConnection) -> Self {
        let m = aff.dim();
        let coeffs = (0..m)
            .map(|i| {
                MatrixField::from_blocks(
                    &aff.gamma[i],
                    &MatrixField::zeros(m, m),
                    &MatrixField::zeros(m, m),
                    &aff.gamma[i].transpose().neg(),
                )
            })
            .collect();
        GConnection { chart: aff.chart.clone(), coeffs, twist: None }
    }

    /// Block in the TM ⊕ T*M splitting: (upper-left, upper-right,
    /// lower-left, lower-right) for direction i.
    pub fn blocks(&self, i: usize) -> (MatrixField, MatrixField, MatrixField, MatrixField) {
        let m = self.dim();
        let a = &self.coeffs[i];
        (a.block(0, 0, m, m), a.block(0, m, m, m), a.block(m, 0, m, m), a.block(m, m, m, m))
    }

    fn twist_for(&self, variant: BracketVariant) -> Option<&KForm> {
        match variant {
            BracketVariant::Untwisted => None,
            BracketVariant::Twisted => self.twist.as_ref(),
        }
    }

    /// Gualtieri torsion on explicit sections:
    /// 𝒯(𝒳,𝒴,𝒵) = ⟨D_𝒳𝒴 − D_𝒴𝒳 − [𝒳,𝒴], 𝒵⟩ + ½(⟨D_𝒵𝒳, 𝒴⟩ − ⟨D_𝒵𝒴, 𝒳⟩).
    pub fn torsion_sections(
        &self,
        s1: &GSection,
        s2: &GSection,
        s3: &GSection,
        variant: BracketVariant,
    ) -> Result<ScalarField> {
        let bracket = courant_bracket(s1, s2, self.twist_for(variant))?;
        let lead = self.apply_gsection(s1, s2).sub(&self.apply_gsection(s2, s1)).sub(&bracket);
        let half = ScalarField::constant(0.5);
        let corr = &(&pairing(&self.apply_gsection(s3, s1), s2)
            - &pairing(&self.apply_gsection(s3, s2), s1))
            * &half;
        Ok(&pairing(&lead, s3) + &corr)
    }

    /// Torsion tensor on the coordinate frame at one point, flattened as
    /// T[(a·2m + b)·2m + c]. Coordinate-frame Courant brackets vanish except
    /// for the twist term h(∂_i, ∂_j, ·).
    pub fn torsion_tensor_at(
        &self,
        ctx: &mut EvalCtx,
        variant: BracketVariant,
    ) -> Result<Vec<f64>> {
        let m = self.dim();
        let n = 2 * m;
        let a_mats: Vec<DMatrix<f64>> =
            self.coeffs.iter().map(|a| a.eval(ctx)).collect::<Result<_>>()?;
        let h_vals: Option<Vec<f64>> = match self.twist_for(variant) {
            None => None,
            Some(h) => {
                // h(e_i, e_j, e_k) over all i,j,k < m
                let mut v = vec![0.0; m * m * m];
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            v[(i * m + j) * m + k] = ctx.value(&h.coeff(&[i, j, k]))?;
                        }
                    }
                }
                Some(v)
            }
        };
        // D_{e_a} e_b as columns: zero when a is a form index
        let d_col = |a: usize, b: usize| -> nalgebra::DVector<f64> {
            if a < m {
                a_mats[a].column(b).into_owned()
            } else {
                nalgebra::DVector::zeros(n)
            }
        };
        // ⟨v, e_c⟩ = ½ v[c ± m]
        let pair_e = |v: &nalgebra::DVector<f64>, c: usize| -> f64 {
            0.5 * if c < m { v[c + m] } else { v[c - m] }
        };
        let mut t = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                let lead = d_col(a, b) - d_col(b, a);
                for c in 0..n {
                    let mut val = pair_e(&lead, c);
                    // twist term: ⟨i_{e_b} i_{e_a} h, e_c⟩ = ½ h(a,b,c)
                    if let Some(hv) = &h_vals {
                        if a < m && b < m && c < m {
                            val -= 0.5 * hv[(a * m + b) * m + c];
                        }
                    }
                    val += 0.5 * (pair_e(&d_col(c, a), b) - pair_e(&d_col(c, b), a));
                    t[(a * n + b) * n + c] = val;
                }
            }
        }
        Ok(t)
    }

    /// Curvature of the coordinate pair (∂_i, ∂_j) at a point, from
    /// coefficient jets: ℛ_ij = ∂_i A_j − ∂_j A_i + [A_i, A_j].
    pub fn curvature_at(&self, ctx: &mut EvalCtx) -> Result<Vec<Vec<DMatrix<f64>>>> {
        let m = self.dim();
        let n = 2 * m;
        // values and first derivatives of each coefficient matrix
        let mut vals = Vec::with_capacity(m);
        let mut ders: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(m);
        for a in &self.coeffs {
            let mut v = DMatrix::zeros(n, n);
            let mut d = vec![DMatrix::zeros(n, n); m];
            for r in 0..n {
                for c in 0..n {
                    let jet = ctx.eval(a.at(r, c), 1)?;
                    v[(r, c)] = jet.value();
                    for (kd, dk) in d.iter_mut().enumerate() {
                        dk[(r, c)] = jet.grad(kd);
                    }
                }
            }
            vals.push(v);
            ders.push(d);
        }
        let mut out = vec![vec![DMatrix::zeros(n, n); m]; m];
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                out[i][j] = &ders[j][i] - &ders[i][j] + (&vals[i] * &vals[j] - &vals[j] * &vals[i]);
            }
        }
        Ok(out)
    }

    /// Curvature as an operator on an explicit section, by composing
    /// covariant derivatives (cross-check route):
    /// ℛ(𝒳,𝒴)s = D_𝒳 D_𝒴 s − D_𝒴 D_𝒳 s − D_{[𝒳,𝒴]} s.
    pub fn curvature_sections(
        &self,
        s1: &GSection,
        s2: &GSection,
        s: &GSection,
    ) -> Result<GSection> {
        let d2 = self.apply_gsection(s2, s);
        let d1 = self.apply_gsection(s1, s);
        let t1 = self.apply_gsection(s1, &d2);
        let t2 = self.apply_gsection(s2, &d1);
        let br = courant_bracket(s1, s2, None)?;
        let t3 = self.apply(&br.vec, s);
        Ok(t1.sub(&t2).sub(&t3))
    }
}

/// C(X+ξ) = X − ξ.
pub fn c_involution(m: usize) -> MatrixField {
    MatrixField::from_blocks(
        &MatrixField::identity(m),
        &MatrixField::zeros(m, m),
        &MatrixField::zeros(m, m),
        &MatrixField::identity(m).neg(),
    )
}

/// Reject h unless dh = 0 at a few deterministic sample points.
fn check_closed(chart: &Chart, h: &KForm) -> Result<()> {
    if h.degree() >= chart.dim() {
        return Ok(()); // top-degree forms are closed on a chart
    }
    let dh = h.d()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0);
    for _ in 0..6 {
        let p = chart.sample(&mut rng);
        let mut ctx = EvalCtx::new(chart.dim(), &p);
        let v = dh.max_coeff(&mut ctx)?;
        if v > 1e-9 {
            return Err(GeoError::Invalid(format!("twist form is not closed (|dh| = {v:.3e})")));
        }
    }
    Ok(())
}

/// The generalized Bismut connection of (G, h) in explicit matrix form.
/// For b = 0 the direction-i coefficient is
/// [[Γ_i, ½ g⁻¹ ĥ_i g⁻¹], [½ ĥ_i, −Γ_iᵀ]] with (ĥ_i)_{kj} = h(∂_i, ∂_j, ∂_k);
/// for b ≠ 0 the b = 0 connection is conjugated by e^b.
pub fn generalized_bismut(metric: &GeneralizedMetric, h: &KForm) -> Result<GConnection> {
    check_closed(&metric.chart, h)?;
    let m = metric.dim();
    let lc = levi_civita(metric);
    let half = ScalarField::constant(0.5);
    let b_hat = metric.b.two_form_hat();
    let eb = crate::courant::b_matrix(&metric.b);
    let emb = crate::courant::b_matrix(&metric.b.neg());
    let coeffs = (0..m)
        .map(|i| {
            let h_hat = MatrixField::from_fn(m, m, |k, j| h.coeff(&[i, j, k]));
            let ll = h_hat.scale(&half);
            let ur = metric.g_inv.matmul(&h_hat).matmul(&metric.g_inv).scale(&half);
            let a0 = MatrixField::from_blocks(&lc.gamma[i], &ur, &ll, &lc.gamma[i].transpose().neg());
            // e^b A_i e^{-b} + e^b ∂_i(e^{-b})
            let gauge = MatrixField::from_blocks(
                &MatrixField::zeros(m, m),
                &MatrixField::zeros(m, m),
                &b_hat.deriv(i).neg(),
                &MatrixField::zeros(m, m),
            );
            eb.matmul(&a0).matmul(&emb).add(&gauge)
        })
        .collect();
    Ok(GConnection { chart: metric.chart.clone(), coeffs, twist: Some(h.clone()) })
}

/// The bracket route for the generalized Bismut connection:
/// D_𝒳𝒴 = [𝒳⁻,𝒴⁺]_h⁺ + [𝒳⁺,𝒴⁻]_h⁻ + [C𝒳⁻,𝒴⁻]_h⁻ + [C𝒳⁺,𝒴⁺]_h⁺,
/// evaluated independently of the matrix form.
pub fn bismut_bracket_route(
    metric: &GeneralizedMetric,
    h: &KForm,
    x: &GSection,
    y: &GSection,
) -> Result<GSection> {
    let m = metric.dim();
    let c = c_involution(m);
    let xp = x.apply_endo(&metric.p_plus);
    let xm = x.apply_endo(&metric.p_minus);
    let yp = y.apply_endo(&metric.p_plus);
    let ym = y.apply_endo(&metric.p_minus);
    let h = Some(h);
    let t1 = courant_bracket(&xm, &yp, h)?.apply_endo(&metric.p_plus);
    let t2 = courant_bracket(&xp, &ym, h)?.apply_endo(&metric.p_minus);
    let t3 = courant_bracket(&xm.apply_endo(&c), &ym, h)?.apply_endo(&metric.p_minus);
    let t4 = courant_bracket(&xp.apply_endo(&c), &yp, h)?.apply_endo(&metric.p_plus);
    Ok(t1.add(&t2).add(&t3).add(&t4))
}

/// Random torsion-free pairing-compatible generalized connection, built from
/// the block form [[∇¹, 0], [L, ∇²]] with ∇¹ torsion-free, ∇² its dual and
/// L(X,Y;Z) = S(X,Y)τ(Z) − S(X,Z)τ(Y) for symmetric S.
pub fn random_torsion_free_connection(chart: &Chart, rng: &mut impl Rng) -> GConnection {
    let m = chart.dim();
    let mut poly = |deg: usize| -> ScalarField {
        let mut f = ScalarField::constant(rng.gen_range(-0.5..0.5));
        for _ in 0..deg {
            f = f + ScalarField::coord(rng.gen_range(0..m)) * ScalarField::constant(rng.gen_range(-0.5..0.5));
        }
        f
    };
    // symmetric Christoffel coefficients Γ^k_{ij} = Γ^k_{ji}
    let mut sym_gamma = vec![vec![vec![ScalarField::zero(); m]; m]; m];
    for k in 0..m {
        for i in 0..m {
            for j in i..m {
                let f = poly(2);
                sym_gamma[k][i][j] = f.clone();
                sym_gamma[k][j][i] = f;
            }
        }
    }
    // symmetric S and covector τ
    let mut s = vec![vec![ScalarField::zero(); m]; m];
    for i in 0..m {
        for j in i..m {
            let f = poly(1);
            s[i][j] = f.clone();
            s[j][i] = f;
        }
    }
    let tau: Vec<ScalarField> = (0..m).map(|_| poly(1)).collect();
    let coeffs = (0..m)
        .map(|i| {
            let gamma_i = MatrixField::from_fn(m, m, |k, j| sym_gamma[k][i][j].clone());
            let l_i = MatrixField::from_fn(m, m, |c, j| &(&s[i][j] * &tau[c]) - &(&s[i][c] * &tau[j]));
            MatrixField::from_blocks(
                &gamma_i,
                &MatrixField::zeros(m, m),
                &l_i,
                &gamma_i.transpose().neg(),
            )
        })
        .collect();
    GConnection { chart: chart.clone(), coeffs, twist: None }
}
