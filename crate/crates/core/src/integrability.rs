//! Integrability functionals: generalized Nijenhuis tensors, the torsion- and
//! curvature-type conditions on the fiber sphere, and the structure-level
//! checks for generalized Kähler / HKT / generalized hyperkähler data.

use nalgebra::DMatrix;

use crate::connections::{classical_nijenhuis_residual, BracketVariant, GConnection};
use crate::courant::{courant_bracket, GSection};
use crate::error::Result;
use crate::expr::{EvalCtx, ScalarField};
use crate::field::MatrixField;
use crate::forms::KForm;
use crate::report::{ResidualReport, Witness};
use crate::sample::SamplePlan;
use crate::structures::{GeneralizedMetric, QuatFrame};

/// 𝒩_h(𝒳,𝒴) = [𝒥𝒳,𝒥𝒴]_h − 𝒥[𝒥𝒳,𝒴]_h − 𝒥[𝒳,𝒥𝒴]_h − [𝒳,𝒴]_h.
pub fn nijenhuis_generalized(
    j: &MatrixField,
    h: Option<&KForm>,
    s1: &GSection,
    s2: &GSection,
) -> Result<GSection> {
    let js1 = s1.apply_endo(j);
    let js2 = s2.apply_endo(j);
    let t1 = courant_bracket(&js1, &js2, h)?;
    let t2 = courant_bracket(&js1, s2, h)?.apply_endo(j);
    let t3 = courant_bracket(s1, &js2, h)?.apply_endo(j);
    let t4 = courant_bracket(s1, s2, h)?;
    Ok(t1.sub(&t2).sub(&t3).sub(&t4))
}

/// Max |𝒩_h| over coordinate-frame section pairs and the plan's points,
/// normalized by (1 + |𝒥|).
pub fn is_generalized_complex(
    dim: usize,
    j: &MatrixField,
    h: Option<&KForm>,
    points: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport> {
    let mut report = ResidualReport::new("nijenhuis", tolerance);
    let n = 2 * dim;
    // Nijenhuis fields per frame pair are built once, evaluated at all points
    let mut fields = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            fields.push((a, b, nijenhuis_generalized(j, h, &GSection::frame(dim, a), &GSection::frame(dim, b))?));
        }
    }
    for p in points {
        let mut ctx = EvalCtx::new(dim, p);
        let scale = 1.0 + j.eval(&mut ctx)?.amax();
        for (a, b, f) in &fields {
            let v = f.eval(&mut ctx)?.norm() / scale;
            report.observe(
                v,
                Witness { point: p.clone(), sections: vec![*a, *b], ..Default::default() },
            );
        }
    }
    Ok(report)
}

/// The four-term type combination on a trilinear tensor given as values
/// T[(a·n + b)·n + c]: returns the max residual over frame triples and its
/// argmax triple.
pub fn type_condition_residual(t: &[f64], n: usize, u: &DMatrix<f64>) -> (f64, [usize; 3]) {
    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    // contractions along one slot
    let contract = |src: &[f64], slot: usize| -> Vec<f64> {
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = 0.0;
                    for q in 0..n {
                        let v = match slot {
                            0 => src[idx(q, b, c)] * u[(q, a)],
                            1 => src[idx(a, q, c)] * u[(q, b)],
                            _ => src[idx(a, b, q)] * u[(q, c)],
                        };
                        acc += v;
                    }
                    out[idx(a, b, c)] = acc;
                }
            }
        }
        out
    };
    let t_c = contract(t, 2);
    let t_bc = contract(&t_c, 1); // T(a, ub, uc)
    let t_b = contract(t, 1);
    let t_ab = contract(&t_b, 0); // wrong pairing? T(ua, ub, c)
    let t_ac = contract(&t_c, 0); // T(ua, b, uc)
    let mut worst = 0.0;
    let mut arg = [0, 0, 0];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let v = (t[idx(a, b, c)] - t_bc[idx(a, b, c)] - t_ac[idx(a, b, c)] - t_ab[idx(a, b, c)]).abs();
                if v > worst {
                    worst = v;
                    arg = [a, b, c];
                }
            }
        }
    }
    (worst, arg)
}

/// Condition (C1): the torsion type combination over points and fiber-sphere
/// samples, for the given bracket variant.
pub fn torsion_type_residual(
    conn: &GConnection,
    frame: &QuatFrame,
    plan: &SamplePlan,
    points: &[Vec<f64>],
    variant: BracketVariant,
) -> Result<ResidualReport> {
    let dim = conn.dim();
    let n = 2 * dim;
    let mut report = ResidualReport::new("c1", plan.tolerance);
    let sphere = plan.sphere_points();
    for p in points {
        let mut ctx = EvalCtx::new(dim, p);
        let t = conn.torsion_tensor_at(&mut ctx, variant)?;
        let t_scale = 1.0 + t.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        let fr = [
            frame.i.eval(&mut ctx)?,
            frame.j.eval(&mut ctx)?,
            frame.k.eval(&mut ctx)?,
        ];
        for abc in &sphere {
            let u = QuatFrame::sphere_element_mat(&fr, *abc);
            let (worst, arg) = type_condition_residual(&t, n, &u);
            report.observe(
                worst / t_scale,
                Witness {
                    point: p.clone(),
                    u_param: Some(*abc),
                    sections: arg.to_vec(),
                    ..Default::default()
                },
            );
        }
    }
    Ok(report)
}

/// Condition (C2): ((ℛ(𝒳∧𝒴 − u𝒳∧u𝒴) + uℛ(u𝒳∧𝒴 + 𝒳∧u𝒴)).u over frame pairs,
/// points and fiber-sphere samples, with A.u = uA − Au.
pub fn curvature_type_residual(
    conn: &GConnection,
    frame: &QuatFrame,
    plan: &SamplePlan,
    points: &[Vec<f64>],
) -> Result<ResidualReport> {
    let dim = conn.dim();
    let n = 2 * dim;
    let mut report = ResidualReport::new("c2", plan.tolerance);
    let sphere = plan.sphere_points();
    for p in points {
        let mut ctx = EvalCtx::new(dim, p);
        let r = conn.curvature_at(&mut ctx)?;
        let r_scale = 1.0
            + r.iter()
                .flat_map(|row| row.iter())
                .map(|m| m.amax())
                .fold(0.0f64, f64::max);
        let fr = [
            frame.i.eval(&mut ctx)?,
            frame.j.eval(&mut ctx)?,
            frame.k.eval(&mut ctx)?,
        ];
        // ℛ on two generalized frame vectors: only TM components curve
        let r_of = |x: &nalgebra::DVector<f64>, y: &nalgebra::DVector<f64>| -> DMatrix<f64> {
            let mut out = DMatrix::zeros(n, n);
            for i in 0..dim {
                if x[i] == 0.0 {
                    continue;
                }
                for jj in 0..dim {
                    if y[jj] == 0.0 || i == jj {
                        continue;
                    }
                    out += &r[i][jj] * (x[i] * y[jj]);
                }
            }
            out
        };
        for abc in &sphere {
            let u = QuatFrame::sphere_element_mat(&fr, *abc);
            for a in 0..n {
                let x = DMatrix::identity(n, n).column(a).into_owned();
                let ux = u.column(a).into_owned();
                for b in (a + 1)..n {
                    let y = DMatrix::identity(n, n).column(b).into_owned();
                    let uy = u.column(b).into_owned();
                    let op = r_of(&x, &y) - r_of(&ux, &uy) + &u * (r_of(&ux, &y) + r_of(&x, &uy));
                    let dot = &u * &op - &op * &u;
                    report.observe(
                        dot.amax() / r_scale,
                        Witness {
                            point: p.clone(),
                            u_param: Some(*abc),
                            sections: vec![a, b],
                            ..Default::default()
                        },
                    );
                }
            }
        }
    }
    Ok(report)
}

/// Classical bihermitian data for the structure checks.
pub struct BihermitianData<'a> {
    pub metric: &'a GeneralizedMetric,
    pub j_plus: &'a MatrixField,
    pub j_minus: &'a MatrixField,
    pub h: &'a KForm,
}

/// Generalized Kähler conditions: J± integrable, the three-way 3-form
/// identity h + db = −J₋dω₋ = J₊dω₊, and the torsion type condition with
/// respect to both J±.
pub fn check_generalized_kahler(
    data: &BihermitianData,
    points: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport> {
    let metric = data.metric;
    let m = metric.dim();
    let mut report = ResidualReport::new("gk", tolerance);

    // (i) classical integrability
    for (label, j) in [("nijenhuis+", data.j_plus), ("nijenhuis-", data.j_minus)] {
        let r = classical_nijenhuis_residual(m, j, points)?;
        report.observe(
            r,
            Witness { point: points[0].clone(), aspect: label.into(), ..Default::default() },
        );
    }

    // (ii) h + db = −J₋ dω₋ = J₊ dω₊
    let w_plus = crate::structures::hermitian_form(&metric.chart, &metric.g, data.j_plus)?;
    let w_minus = crate::structures::hermitian_form(&metric.chart, &metric.g, data.j_minus)?;
    let t_plus = w_plus.d()?.apply_endo(data.j_plus);
    let t_minus_neg = w_minus.d()?.apply_endo(data.j_minus).neg();
    let lhs = data.h.add(&metric.b.d()?);
    for p in points {
        let mut ctx = EvalCtx::new(m, p);
        let scale = 1.0 + lhs.max_coeff(&mut ctx)?.max(t_plus.max_coeff(&mut ctx)?);
        let d1 = lhs.sub(&t_plus).max_coeff(&mut ctx)? / scale;
        let d2 = lhs.sub(&t_minus_neg).max_coeff(&mut ctx)? / scale;
        report.observe(
            d1,
            Witness { point: p.clone(), aspect: "h+db = J+dw+".into(), ..Default::default() },
        );
        report.observe(
            d2,
            Witness { point: p.clone(), aspect: "h+db = -J-dw-".into(), ..Default::default() },
        );
    }

    // (iii) type (2,1)+(1,2) of T = J₊dω₊ with respect to both J±
    for p in points {
        let mut ctx = EvalCtx::new(m, p);
        let mut t_vals = vec![0.0; m * m * m];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    t_vals[(a * m + b) * m + c] = ctx.value(&t_plus.coeff(&[a, b, c]))?;
                }
            }
        }
        let scale = 1.0 + t_vals.iter().cloned().fold(0.0f64, |x, y| x.max(y.abs()));
        for (label, j) in [("type+", data.j_plus), ("type-", data.j_minus)] {
            let jm = j.eval(&mut ctx)?;
            let (worst, arg) = type_condition_residual(&t_vals, m, &jm);
            report.observe(
                worst / scale,
                Witness {
                    point: p.clone(),
                    sections: arg.to_vec(),
                    aspect: label.into(),
                    ..Default::default()
                },
            );
        }
    }
    Ok(report)
}

/// HKT condition: I dω_I = J dω_J = K dω_K (pairwise residuals), with the
/// quaternion relations and hermitian compatibility as preconditions.
pub fn check_hkt(
    metric: &GeneralizedMetric,
    triple: [&MatrixField; 3],
    points: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport> {
    let m = metric.dim();
    let mut report = ResidualReport::new("hkt", tolerance);
    // quaternion relations at sample points
    for p in points {
        let mut ctx = EvalCtx::new(m, p);
        let i = triple[0].eval(&mut ctx)?;
        let j = triple[1].eval(&mut ctx)?;
        let k = triple[2].eval(&mut ctx)?;
        let scale = 1.0 + i.amax().max(j.amax()).max(k.amax());
        let q1 = (&i * &j - &k).amax() / scale;
        let q2 = (&j * &i + &k).amax() / scale;
        let sq = (&i * &i + DMatrix::identity(m, m)).amax() / scale;
        for (v, aspect) in [(q1, "IJ=K"), (q2, "JI=-K"), (sq, "I²=-1")] {
            report.observe(
                v,
                Witness { point: p.clone(), aspect: aspect.into(), ..Default::default() },
            );
        }
    }
    // torsion forms
    let mut torsions = Vec::new();
    for j in triple {
        let w = crate::structures::hermitian_form(&metric.chart, &metric.g, j)?;
        torsions.push(w.d()?.apply_endo(j));
    }
    for p in points {
        let mut ctx = EvalCtx::new(m, p);
        let scale = 1.0 + torsions[0].max_coeff(&mut ctx)?;
        let d01 = torsions[0].sub(&torsions[1]).max_coeff(&mut ctx)? / scale;
        let d02 = torsions[0].sub(&torsions[2]).max_coeff(&mut ctx)? / scale;
        report.observe(
            d01,
            Witness { point: p.clone(), aspect: "Idw_I = Jdw_J".into(), ..Default::default() },
        );
        report.observe(
            d02,
            Witness { point: p.clone(), aspect: "Idw_I = Kdw_K".into(), ..Default::default() },
        );
    }
    Ok(report)
}

/// Generalized hyperkähler: quaternion relations of the frame, commutation
/// with G, the generalized Kähler check for each frame element (via its
/// induced bihermitian pair), the torsion identity T₊ = −T₋ and the strong
/// condition dT± = 0.
pub fn check_generalized_hyperkahler(
    metric: &GeneralizedMetric,
    frame: &QuatFrame,
    classical: Option<(&[MatrixField; 3], &[MatrixField; 3])>,
    h: &KForm,
    points: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport> {
    let m = metric.dim();
    let mut report = ResidualReport::new("ghk", tolerance);
    for p in points {
        let mut ctx = EvalCtx::new(m, p);
        let fi = frame.i.eval(&mut ctx)?;
        let fj = frame.j.eval(&mut ctx)?;
        let fk = frame.k.eval(&mut ctx)?;
        let big = metric.big_g.eval(&mut ctx)?;
        let scale = 1.0 + fi.amax().max(fj.amax()).max(fk.amax());
        let rels = [
            ((&fi * &fj - &fk).amax(), "IJ=K"),
            ((&fj * &fi + &fk).amax(), "JI=-K"),
            ((&fi * &fi + DMatrix::identity(2 * m, 2 * m)).amax(), "I²=-1"),
            ((&fi * &big - &big * &fi).amax(), "IG=GI"),
            ((&fj * &big - &big * &fj).amax(), "JG=GJ"),
            ((&fk * &big - &big * &fk).amax(), "KG=GK"),
        ];
        for (v, aspect) in rels {
            report.observe(
                v / scale,
                Witness { point: p.clone(), aspect: aspect.into(), ..Default::default() },
            );
        }
    }

    // classical pairs either supplied or extracted by projection to TM
    let proj = MatrixField::from_fn(m, 2 * m, |r, c| {
        if r == c {
            ScalarField::one()
        } else {
            ScalarField::zero()
        }
    });
    let extracted: Vec<(MatrixField, MatrixField)> = match classical {
        Some((plus, minus)) => {
            plus.iter().cloned().zip(minus.iter().cloned()).collect()
        }
        None => [&frame.i, &frame.j, &frame.k]
            .iter()
            .map(|sigma| {
                let plus = proj.matmul(sigma).matmul(&metric.pi_inv_plus);
                let minus = proj.matmul(sigma).matmul(&metric.pi_inv_minus);
                (plus, minus)
            })
            .collect(),
    };
    for (idx, (jp, jm)) in extracted.iter().enumerate() {
        let gk = check_generalized_kahler(
            &BihermitianData { metric, j_plus: jp, j_minus: jm, h },
            points,
            tolerance,
        )?;
        let mut w = gk.witness.clone();
        w.aspect = format!("gk[{idx}]: {}", w.aspect);
        report.observe(gk.max_residual, w);
    }

    // T₊ = −T₋ and strong condition dT = 0 on the first pair
    let (jp, jm) = &extracted[0];
    let wp = crate::structures::hermitian_form(&metric.chart, &metric.g, jp)?;
    let wm = crate::structures::hermitian_form(&metric.chart, &metric.g, jm)?;
    let t_plus = wp.d()?.apply_endo(jp);
    let t_minus = wm.d()?.apply_endo(jm);
    let sum = t_plus.add(&t_minus);
    for p in points {
        let mut ctx = EvalCtx::new(m, p);
        let scale = 1.0 + t_plus.max_coeff(&mut ctx)?;
        report.observe(
            sum.max_coeff(&mut ctx)? / scale,
            Witness { point: p.clone(), aspect: "T+ = -T-".into(), ..Default::default() },
        );
        if m > 3 {
            let dt = t_plus.d()?.max_coeff(&mut ctx)? / scale;
            report.observe(
                dt,
                Witness { point: p.clone(), aspect: "dT = 0".into(), ..Default::default() },
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::structures::{quaternion_left, GKQuadruple, WhichGcs};
    use nalgebra::DMatrix;
    use approx::assert_relative_eq;

    fn flat_metric(m: usize) -> GeneralizedMetric {
        let chart = Chart::centered("flat", m, 1.5, 0.0);
        GeneralizedMetric::new(chart, MatrixField::identity(m), KForm::zero(m, 2), None).unwrap()
    }

    fn gcs_complex_type(j: &DMatrix<f64>) -> MatrixField {
        let m = j.nrows();
        let jf = MatrixField::from_const(j);
        MatrixField::from_blocks(
            &jf,
            &MatrixField::zeros(m, m),
            &MatrixField::zeros(m, m),
            &jf.transpose().neg(),
        )
    }

    #[test]
    fn constant_complex_type_is_integrable() {
        let [i, _, _] = quaternion_left();
        let j = gcs_complex_type(&i);
        let pts = vec![vec![0.1, 0.2, 0.3, 0.4], vec![-0.5, 0.6, 0.7, -0.8]];
        let rep = is_generalized_complex(4, &j, None, &pts, 1e-10).unwrap();
        assert!(rep.verdict, "residual {}", rep.max_residual);
    }

    #[test]
    fn constant_symplectic_type_is_integrable() {
        let gm = flat_metric(4);
        let [i, _, _] = quaternion_left();
        let quad = GKQuadruple::new(gm, MatrixField::from_const(&i), MatrixField::from_const(&i));
        let j2 = quad.gcs_block_route(WhichGcs::Second);
        let pts = vec![vec![0.4, -0.2, 0.9, 0.1]];
        let rep = is_generalized_complex(4, &j2, None, &pts, 1e-10).unwrap();
        assert!(rep.verdict, "residual {}", rep.max_residual);
    }

    #[test]
    fn b_conjugate_integrable_iff_b_closed() {
        // needs complex dimension >= 3: on a complex surface every 3-form is
        // (2,1)+(1,2), so db never obstructs. Use R^6 with the standard J.
        let mut i6 = DMatrix::zeros(6, 6);
        for b in 0..3 {
            i6[(2 * b, 2 * b + 1)] = -1.0;
            i6[(2 * b + 1, 2 * b)] = 1.0;
        }
        let j = gcs_complex_type(&i6);
        let pts = vec![vec![0.3, 0.45, -0.2, 0.8, 0.1, -0.6]];
        // closed b: still integrable
        let b_closed = KForm::monomial(6, &[0, 1], ScalarField::coord(0));
        let jc = crate::courant::conjugate_endo(&b_closed, &j);
        let rep = is_generalized_complex(6, &jc, None, &pts, 1e-10).unwrap();
        assert!(rep.verdict, "closed-b conjugate residual {}", rep.max_residual);
        // non-closed b whose db has a (3,0)+(0,3) part: fails untwisted
        let b_open = KForm::monomial(6, &[2, 4], ScalarField::coord(1));
        let jo = crate::courant::conjugate_endo(&b_open, &j);
        let rep2 = is_generalized_complex(6, &jo, None, &pts, 1e-10).unwrap();
        assert!(!rep2.verdict, "non-closed-b conjugate should fail, got {}", rep2.max_residual);
        // ... and passes against the bracket twisted by -db (the conjugate of
        // the untwisted bracket under e^b)
        let minus_db = b_open.d().unwrap().neg();
        let rep3 = is_generalized_complex(6, &jo, Some(&minus_db), &pts, 1e-10).unwrap();
        assert!(rep3.verdict, "twist-matched conjugate residual {}", rep3.max_residual);
    }

    #[test]
    fn nijenhuis_tensorial_for_valid_gcs() {
        // scaling one argument by a function scales the output by its value,
        // even when the tensor is nonzero (rotation-perturbed complex type)
        let [i, _, _] = quaternion_left();
        let theta = ScalarField::coord(0) * ScalarField::coord(1);
        let (c, sn) = (theta.cos(), theta.sin());
        let mut rot = MatrixField::identity(4);
        *rot.at_mut(1, 1) = c.clone();
        *rot.at_mut(1, 2) = -&sn;
        *rot.at_mut(2, 1) = sn.clone();
        *rot.at_mut(2, 2) = c.clone();
        let j_tm = rot.matmul(&MatrixField::from_const(&i)).matmul(&rot.transpose());
        let twisted = MatrixField::from_blocks(
            &j_tm,
            &MatrixField::zeros(4, 4),
            &MatrixField::zeros(4, 4),
            &j_tm.transpose().neg(),
        );
        let f = ScalarField::coord(0) + ScalarField::constant(2.0);
        let s1 = GSection::frame(4, 0);
        let s2 = GSection::frame(4, 1);
        let p = vec![0.3, -0.4, 0.5, 0.6];
        let mut ctx = EvalCtx::new(4, &p);
        let n_plain = nijenhuis_generalized(&twisted, None, &s1, &s2).unwrap();
        let n_scaled = nijenhuis_generalized(&twisted, None, &s1.scale(&f), &s2).unwrap();
        let fval = ctx.value(&f).unwrap();
        let expect = n_plain.scale(&ScalarField::constant(fval));
        let d = n_scaled.sub(&expect).eval(&mut ctx).unwrap().amax();
        let scale = 1.0 + n_plain.eval(&mut ctx).unwrap().amax();
        assert!(d / scale <= 1e-9, "tensoriality residual {d}");
        assert!(n_plain.eval(&mut ctx).unwrap().amax() > 1e-3, "test needs a nonzero case");
    }

    #[test]
    fn type_condition_kills_21_12_parts() {
        // T = λ ∧ ω_I with λ = dx1 is (2,1)+(1,2) wrt I but not wrt J
        let [i, j, _] = quaternion_left();
        let gm = flat_metric(4);
        let i_f = MatrixField::from_const(&i);
        let w_i = crate::structures::hermitian_form(&gm.chart, &gm.g, &i_f).unwrap();
        let lam = KForm::monomial(4, &[0], ScalarField::one());
        let t = lam.wedge(&w_i);
        let p = [0.0; 4];
        let mut ctx = EvalCtx::new(4, &p);
        let mut vals = vec![0.0; 64];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    vals[(a * 4 + b) * 4 + c] = ctx.value(&t.coeff(&[a, b, c])).unwrap();
                }
            }
        }
        let (res_i, _) = type_condition_residual(&vals, 4, &i);
        assert!(res_i <= 1e-12, "λ∧ω_I must be type (2,1)+(1,2) wrt I, got {res_i}");
        // in real dimension 4 every 3-form is (2,1)+(1,2) for every J
        let (res_j, _) = type_condition_residual(&vals, 4, &j);
        assert!(res_j <= 1e-12, "dim-4 type condition is vacuous, got {res_j}");
        // the generalized version on TM ⊕ T*M (rank 8) is not vacuous:
        // S = λ ∧ ω_𝓘 with ω_𝓘(Y,Z) = ⟨𝓘Y,Z⟩ fails the condition at u = 𝓙
        let gi = gcs_complex_type(&i);
        let gj = gcs_complex_type(&j);
        let p0 = [0.0; 4];
        let mut c2 = EvalCtx::new(4, &p0);
        let gim = gi.eval(&mut c2).unwrap();
        let gjm = gj.eval(&mut c2).unwrap();
        let s0 = crate::structures::pairing_adjoint_mat(&DMatrix::identity(8, 8));
        let _ = s0;
        let pair = |a: usize, b: usize| -> f64 {
            // ⟨e_a, e_b⟩ with the ½ convention
            if a < 4 && b >= 4 && b - 4 == a {
                0.5
            } else if b < 4 && a >= 4 && a - 4 == b {
                0.5
            } else {
                0.0
            }
        };
        let mut s_vals = vec![0.0; 8 * 8 * 8];
        for a in 0..8 {
            for b in 0..8 {
                for c in 0..8 {
                    // λ = pairing with (∂_1 + dx^1): λ(e_a) = ⟨e_a, e_0 + e_4⟩
                    let lam = |q: usize| pair(q, 0) + pair(q, 4);
                    let om = |y: usize, z: usize| -> f64 {
                        (0..8).map(|r| gim[(r, y)] * pair(r, z)).sum()
                    };
                    s_vals[(a * 8 + b) * 8 + c] =
                        lam(a) * om(b, c) - lam(b) * om(a, c) + lam(c) * om(a, b);
                }
            }
        }
        let (res_gi, _) = type_condition_residual(&s_vals, 8, &gim);
        assert!(res_gi <= 1e-12, "λ∧ω_𝓘 is (2,1)+(1,2) wrt 𝓘, got {res_gi}");
        let (res_gj, _) = type_condition_residual(&s_vals, 8, &gjm);
        assert!(res_gj > 0.1, "λ∧ω_𝓘 must fail wrt 𝓙 on the rank-8 bundle, got {res_gj}");
    }

    #[test]
    fn gk_holds_on_flat_kahler() {
        let gm = flat_metric(4);
        let [i, _, _] = quaternion_left();
        let i_f = MatrixField::from_const(&i);
        let h = KForm::zero(4, 3);
        let pts = vec![vec![0.2, -0.3, 0.4, 0.5]];
        let rep = check_generalized_kahler(
            &BihermitianData { metric: &gm, j_plus: &i_f, j_minus: &i_f, h: &h },
            &pts,
            1e-9,
        )
        .unwrap();
        assert!(rep.verdict, "flat Kähler must pass, residual {}", rep.max_residual);
    }

    #[test]
    fn u_sign_symmetry_of_type_condition() {
        // C1-style combination is even in u
        let [i, j, k] = quaternion_left();
        let mut t = vec![0.0; 64];
        // arbitrary skewed tensor values
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    t[(a * 4 + b) * 4 + c] = (a as f64) - 0.5 * (b as f64) * (c as f64).sin();
                }
            }
        }
        let u = 0.36 * &i + 0.48 * &j + 0.8 * &k;
        let (r1, _) = type_condition_residual(&t, 4, &u);
        let (r2, _) = type_condition_residual(&t, 4, &(-u.clone()));
        assert_relative_eq!(r1, r2, epsilon = 1e-13);
    }
}
