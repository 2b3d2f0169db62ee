//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use caustyk::cp::{choi_of_kraus, conjugation, ctrl, identity_map, ChoiMap, ClassicalObject};
use caustyk::dsl::{elaborate, parse_type, random_expr, Atom, TypeExpr};
use caustyk::harness::families::{random_morphism, Shape};
use caustyk::harness::laws::{adversarial_scripts, closure_grid, product_memberships, random_two_party};
use caustyk::harness::{
    boundary_pool, f_eval, faithfulness_probe, fullness_reconstruct, lax_seq, lax_tensor, probe_boundaries,
    strong_closure_check, BlackBoxTransform, Reconstruction,
};
use caustyk::herm::{CMat, HermElem, C64};
use caustyk::random::{
    add_maps, random_channel, random_density, random_member, random_two_way, random_unitary, rng, Rng64, TwoParty,
};
use caustyk::signalling::{
    bipartite_hom_state, coend_equiv, comb_decompose, equiv_certificate, nonsignalling_test, recompose, Cut,
    DecompPair, SeqSplit, SignalError, Signalling,
};
use caustyk::tol::Tolerances;
use caustyk::types::{self, CausMorphism, CausObject};
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn fo(d: usize) -> CausObject {
    types::mk_first_order(d).unwrap()
}

fn chan_obj(a: usize, b: usize) -> CausObject {
    types::hom_obj(&fo(a), &fo(b))
}

/// Runs `n` seeded trials in parallel; each returns `Ok(residual)` on success.
fn trials<F>(tag: u64, n: usize, f: F) -> Vec<Result<f64, String>>
where
    F: Fn(&mut Rng64, usize) -> Result<f64, String> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(&mut rng(tag * 1_000_003 + i as u64), i))
        .collect()
}

fn summarize(results: &[Result<f64, String>]) -> (usize, f64, Option<String>) {
    let ok = results.iter().filter(|r| r.is_ok()).count();
    let worst = results.iter().filter_map(|r| r.as_ref().ok()).fold(0.0_f64, |a, &b| a.max(b));
    let first_err = results.iter().find_map(|r| r.as_ref().err().cloned());
    (ok, worst, first_err)
}

fn tally(label: &str, results: &[Result<f64, String>]) -> Verdict {
    let (ok, worst, err) = summarize(results);
    let n = results.len();
    let mut detail = format!("{label}: {ok}/{n} (max residual {worst:.2e})");
    if let Some(e) = err {
        detail.push_str(&format!("; first failure: {e}"));
    }
    verdict(ok == n, detail)
}

fn within(r: f64, tol: f64, what: &str) -> Result<f64, String> {
    if r <= tol {
        Ok(r)
    } else {
        Err(format!("{what}: residual {r:.3e} > {tol:.0e}"))
    }
}

fn ac1() -> Verdict {
    let res = trials(1, 500, |r, _| {
        let e = random_expr(r, 16, 4);
        let a = elaborate(&e).map_err(|err| format!("{e}: {err}"))?;
        let back = types::dual_obj(&types::dual_obj(&a));
        within(back.distance_to(&a), 1e-9, &e.to_string())
    });
    tally("A** = A on random objects", &res)
}

fn ac2() -> Verdict {
    let pool = boundary_pool();
    let mut cases = Vec::new();
    for x in &pool {
        for y in &pool {
            cases.push((x.clone(), y.clone()));
        }
    }
    let pairs: Vec<Result<f64, String>> = cases
        .par_iter()
        .map(|(x, y)| {
            let t = types::tensor_obj(x, y);
            let r = t
                .distance_to(&types::seq_obj(x, y))
                .max(t.distance_to(&types::par_obj(x, y)));
            within(r, 1e-9, &format!("X={:?} Y={:?}", x.factor_dims(), y.factor_dims()))
        })
        .collect();
    let with_a = trials(2, 120, |r, i| {
        let x = &pool[i % pool.len()];
        let e = random_expr(r, 64 / x.dim(), 3);
        let a = elaborate(&e).map_err(|err| err.to_string())?;
        let d = types::seq_obj(&a, x).distance_to(&types::par_obj(&a, x));
        within(d, 1e-9, &format!("A={e} X={:?}", x.factor_dims()))
    });
    let all: Vec<_> = pairs.into_iter().chain(with_a).collect();
    tally("X⊗Y = X◁Y = X⅋Y and A◁X = A⅋X", &all)
}

fn ac3() -> Verdict {
    let res = trials(3, 300, |r, i| {
        let tau = random_two_party(r, i);
        let class = nonsignalling_test(&tau, &Cut::leading(&tau, 1, 1))
            .map_err(|e| e.to_string())?
            .class;
        let got = product_memberships(&tau).map_err(|e| e.to_string())?;
        let want = [class == Signalling::Both, class.is_one_way(), true];
        if got == want {
            Ok(0.0)
        } else {
            Err(format!("class {}: memberships {got:?}, marginal tests {want:?}", class.as_str()))
        }
    });
    let mut counts = [0usize; 4];
    for i in 0..300 {
        counts[i % 4] += 1;
    }
    let mut v = tally("type membership agrees with marginal tests", &res);
    v.detail
        .push_str(&format!(" [non-signalling {}, A→B {}, B→A {}, two-way {}]", counts[0], counts[1], counts[2], counts[3]));
    v
}

/// A random one-way channel `(id ⊗ σ)(ρ ⊗ id)` together with its generating
/// pair in comb form.
struct OneWay {
    shape: TwoParty,
    tau: ChoiMap,
    generating: DecompPair,
}

fn random_shape<R: Rng + ?Sized>(r: &mut R) -> TwoParty {
    loop {
        let s = TwoParty {
            a_in: r.random_range(1..=3),
            a_out: r.random_range(2..=3),
            b_in: r.random_range(1..=3),
            b_out: r.random_range(2..=3),
        };
        if s.a_in * s.a_out * s.b_in * s.b_out <= 36 {
            return s;
        }
    }
}

fn one_way<R: Rng + ?Sized>(r: &mut R, s: TwoParty, z: usize) -> OneWay {
    let rho = random_channel(r, &[s.a_in], &[s.a_out, z], 2);
    let sigma = random_channel(r, &[z, s.b_in], &[s.b_out], 2);
    let tau = identity_map(&[s.a_out])
        .tensor(&sigma)
        .compose(&rho.tensor(&identity_map(&[s.b_in])))
        .and_then(|m| m.regroup(s.in_dims(), s.out_dims()))
        .unwrap();
    // comb form: ρ as a state on [a_in, a_out, z]; σ as z → [b_in, b_out, X'] with X' trivial
    let rho_c = ChoiMap::from_state(&rho.hom_state(), vec![s.a_in, s.a_out, z]).unwrap();
    let js = sigma
        .choi()
        .permute_factors(&[s.b_out, z, s.b_in], &[2, 0, 1])
        .unwrap();
    let sigma_c = ChoiMap::from_choi_unchecked(vec![z], vec![s.b_in, s.b_out, 1], js).unwrap();
    OneWay {
        shape: s,
        tau,
        generating: DecompPair::new(rho_c, sigma_c).unwrap(),
    }
}

fn comb_of(tau: &ChoiMap, s: TwoParty) -> ChoiMap {
    let state = bipartite_hom_state(tau, &Cut::leading(tau, 1, 1)).unwrap();
    ChoiMap::from_state(&state, vec![s.a_in, s.a_out, s.b_in, s.b_out]).unwrap()
}

fn comb_split(s: TwoParty) -> SeqSplit {
    SeqSplit::new(vec![1], chan_obj(s.a_in, s.a_out), chan_obj(s.b_in, s.b_out), vec![1])
}

fn ac4() -> Verdict {
    let round = trials(4, 200, |r, _| {
        let s = random_shape(r);
        let z = r.random_range(1..=3);
        let w = one_way(r, s, z);
        let comb = comb_of(&w.tau, s);
        let pair = comb_decompose(&comb, &comb_split(s)).map_err(|e| format!("{s:?}: {e}"))?;
        let back = recompose(&pair).map_err(|e| e.to_string())?;
        within(back.distance(&comb), 1e-8, &format!("{s:?}"))
    });
    let rejected = trials(40, 50, |r, _| {
        let tau = random_two_way(r, TwoParty::QUBITS);
        let comb = comb_of(&tau, TwoParty::QUBITS);
        match comb_decompose(&comb, &comb_split(TwoParty::QUBITS)) {
            Err(SignalError::NotOneWay { .. }) => Ok(0.0),
            Err(e) => Err(format!("rejected for the wrong reason: {e}")),
            Ok(_) => Err("two-way channel decomposed".into()),
        }
    });
    let a = tally("round trips", &round);
    let b = tally("two-way rejected as not one-way", &rejected);
    verdict(a.pass && b.pass, format!("{}; {}", a.detail, b.detail))
}

fn ac5() -> Verdict {
    let tol = Tolerances::default();
    let res = trials(5, 250, |r, i| {
        let s = TwoParty::QUBITS;
        let split = comb_split(s);
        let carrier = split.carrier().map_err(|e| e.to_string())?;
        let seq = types::seq_obj(&split.a, &split.b);
        let (state, origin) = match i % 5 {
            0 | 1 => (random_member(r, &seq), "linear test"),
            2 | 3 => {
                let z = r.random_range(1..=3);
                (comb_of(&one_way(r, s, z).tau, s).choi().clone(), "composed pair")
            }
            _ => (random_member(r, &types::par_obj(&split.a, &split.b)), "par member"),
        };
        let tau = ChoiMap::from_state(&state, split.out_dims()).map_err(|e| e.to_string())?;
        let linear = types::membership(&carrier, &state, &tol).map_err(|e| e.to_string())?.member;
        let decomposes = comb_decompose(&tau, &split).is_ok();
        if i % 5 < 4 && !linear {
            return Err(format!("{origin}: generated member fails the linear test"));
        }
        if linear == decomposes {
            Ok(0.0)
        } else {
            Err(format!("{origin}: linear {linear}, decomposes {decomposes}"))
        }
    });
    tally(
        "linear ◁ test ⟺ decomposition (100 linear-test members, 100 composed pairs, 50 ⅋ members)",
        &res,
    )
}

/// `ρ' = (id ⊗ V)ρ`, `σ' = σ ∘ C` with `C` undoing `V` and sending the
/// complement of its range to `|0⟩`.
fn pad(r: &mut Rng64, p: &DecompPair, extra: usize) -> DecompPair {
    let z = p.z_dim;
    let z2 = z + extra;
    let u = random_unitary(r, z2);
    let v = u.columns(0, z).into_owned();
    let lift = identity_map(p.a_dims()).tensor(&conjugation(&v, vec![z], vec![z2]).unwrap());
    let mut out = p.a_dims().to_vec();
    out.push(z2);
    let rho = lift.compose(&p.rho).unwrap().regroup(p.rho.in_dims().to_vec(), out).unwrap();
    let mut kraus = vec![v.adjoint()];
    for j in z..z2 {
        let e = u.column(j).adjoint();
        kraus.push(CMat::from_fn(z, z2, |row, c| if row == 0 { e[(0, c)] } else { C64::new(0.0, 0.0) }));
    }
    let undo = choi_of_kraus(&kraus, vec![z2], vec![z]).unwrap();
    let sigma = p.sigma.compose(&undo).unwrap();
    DecompPair::new(rho, sigma).unwrap()
}

fn slide_unitary(r: &mut Rng64, p: &DecompPair) -> DecompPair {
    let z = p.z_dim;
    let u = random_unitary(r, z);
    let lift = identity_map(p.a_dims()).tensor(&conjugation(&u, vec![z], vec![z]).unwrap());
    let rho = lift.compose(&p.rho).unwrap().regroup(p.rho.in_dims().to_vec(), p.rho.out_dims().to_vec()).unwrap();
    let sigma = p.sigma.compose(&conjugation(&u.adjoint(), vec![z], vec![z]).unwrap()).unwrap();
    DecompPair::new(rho, sigma).unwrap()
}

fn pair_gap(p: &DecompPair, q: &DecompPair) -> f64 {
    if p.z_dim != q.z_dim {
        return f64::INFINITY;
    }
    p.rho.distance(&q.rho).max(p.sigma.distance(&q.sigma))
}

fn ac6() -> Verdict {
    let tol = Tolerances::default();
    let equal = trials(6, 100, |r, i| {
        let s = if i % 2 == 0 { TwoParty::QUBITS } else { random_shape(r) };
        let z = r.random_range(1..=3);
        let w = one_way(r, s, z);
        let gen_gap = recompose(&w.generating).unwrap().distance(&comb_of(&w.tau, w.shape));
        if gen_gap > 1e-9 {
            return Err(format!("generating pair does not recompose ({gen_gap:.2e})"));
        }
        let canon = comb_decompose(&comb_of(&w.tau, s), &comb_split(s)).map_err(|e| e.to_string())?;
        let (p1, p2, label) = match i % 4 {
            0 => (canon, w.generating.clone(), "canonical vs generating"),
            1 => {
                let slid = slide_unitary(r, &canon);
                (canon, slid, "unitary slide")
            }
            2 => {
                let extra = r.random_range(1..=2);
                let padded = pad(r, &canon, extra);
                (canon, padded, "padding")
            }
            _ => {
                let padded = pad(r, &w.generating, 1);
                (padded, canon, "padded generating vs canonical")
            }
        };
        if !coend_equiv(&p1, &p2).map_err(|e| e.to_string())? {
            return Err(format!("{label}: judged inequivalent"));
        }
        let steps = equiv_certificate(&p1, &p2).map_err(|e| format!("{label}: {e}"))?;
        let mut worst: f64 = 0.0;
        for (k, st) in steps.iter().enumerate() {
            if !st.f.is_cptp(&tol) {
                return Err(format!("{label}: step {k} is not CPTP"));
            }
            let res = st.check().map_err(|e| e.to_string())?;
            let composite = recompose(&st.before).unwrap().distance(&recompose(&st.after).unwrap());
            worst = worst.max(res).max(composite);
        }
        let ends = match (steps.first(), steps.last()) {
            (Some(a), Some(b)) => pair_gap(&a.before, &p1).max(pair_gap(&b.after, &p2)),
            _ => pair_gap(&p1, &p2),
        };
        let links = steps.windows(2).map(|w| pair_gap(&w[0].after, &w[1].before)).fold(0.0, f64::max);
        within(worst, 1e-7, label)?;
        within(ends.max(links), 1e-7, &format!("{label}: chain does not connect the pairs"))?;
        Ok(worst)
    });
    let unequal = trials(60, 100, |r, i| {
        let s = TwoParty::QUBITS;
        let w1 = one_way(r, s, 2);
        let w2 = one_way(r, s, 2);
        let p1 = comb_decompose(&comb_of(&w1.tau, s), &comb_split(s)).map_err(|e| e.to_string())?;
        let p2 = if i % 2 == 0 {
            comb_decompose(&comb_of(&w2.tau, s), &comb_split(s)).map_err(|e| e.to_string())?
        } else {
            w2.generating
        };
        match coend_equiv(&p1, &p2) {
            Ok(false) => Ok(0.0),
            Ok(true) => Err("different channels judged equivalent".into()),
            Err(e) => Err(e.to_string()),
        }
    });
    let a = tally("equivalent pairs with valid certificates", &equal);
    let b = tally("mismatched pairs rejected", &unequal);
    verdict(a.pass && b.pass, format!("{}; {}", a.detail, b.detail))
}

fn same_type_pair(r: &mut Rng64, shape: Shape) -> (CausMorphism, CausMorphism) {
    let f = random_morphism(r, shape);
    loop {
        let g = random_morphism(r, shape);
        if g.source().factor_dims() == f.source().factor_dims() && g.target().factor_dims() == f.target().factor_dims() {
            return (f, g);
        }
    }
}

fn ac7() -> Verdict {
    let res = trials(7, 100, |r, i| {
        let shape = Shape::ALL[i % 4];
        let (f, h) = same_type_pair(r, shape);
        // every other pair is a small perturbation of the first map
        let g = if i % 8 < 4 {
            h
        } else {
            let eps = 10f64.powf(r.random_range(-5.0..-3.0));
            let mix = add_maps(&f.map().scale(1.0 - eps), &h.map().scale(eps));
            types::check_morphism(&mix, f.source(), f.target()).map_err(|e| e.to_string())?
        };
        let d = f.map().distance(g.map());
        if d <= 1e-6 {
            return Ok(0.0);
        }
        if faithfulness_probe(&f, &g).map_err(|e| e.to_string())? {
            Ok(0.0)
        } else {
            Err(format!("{shape:?}: Choi distance {d:.2e} not seen by the cup probe"))
        }
    });
    tally("pairs told apart by the single cup probe", &res)
}

fn ac8() -> Verdict {
    let res = trials(8, 100, |r, i| {
        let shape = Shape::ALL[i % 4];
        let h = random_morphism(r, shape);
        let s = BlackBoxTransform::of_morphism(&h);
        match fullness_reconstruct(&s, r.random(), 2).map_err(|e| e.to_string())? {
            Reconstruction::Recovered { morphism, .. } => {
                within(morphism.map().distance(h.map()), 1e-8, &format!("{shape:?}"))
            }
            Reconstruction::NotInImage { reason, .. } => Err(format!("{shape:?}: flagged {reason:?}")),
        }
    });
    let a = fo(2);
    let mut flagged = Vec::new();
    for (name, script) in adversarial_scripts() {
        let bb = script.into_transform(&a, &a).unwrap();
        let rec = fullness_reconstruct(&bb, 8, 2).unwrap();
        flagged.push((name, !rec.is_recovered()));
    }
    let required = ["partial_transpose", "boundary_dependent", "nonlinear"];
    let adv_ok = required
        .iter()
        .all(|n| flagged.iter().any(|(m, f)| m == n && *f));
    let v = tally("black boxes F(h) reconstructed", &res);
    let names: Vec<String> = flagged
        .iter()
        .map(|(n, f)| format!("{n}={}", if *f { "flagged" } else { "ACCEPTED" }))
        .collect();
    verdict(v.pass && adv_ok, format!("{}; adversaries: {}", v.detail, names.join(", ")))
}

fn ac9() -> Verdict {
    let grid = closure_grid();
    let reports: Vec<_> = grid
        .par_iter()
        .enumerate()
        .map(|(k, (name, [a, b, x, xo]))| (name, strong_closure_check(a, b, x, xo, 20, 900 + k as u64)))
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, rep) in reports {
        match rep {
            Ok(rep) => {
                let ok = rep.pass
                    && rep.lhs_rank == rep.rhs_rank
                    && rep.lhs_to_rhs_members == rep.samples
                    && rep.rhs_to_lhs_members == rep.samples
                    && rep.max_round_trip <= 1e-9;
                pass &= ok;
                parts.push(format!(
                    "({name}) rank {}={} rt {:.1e}{}",
                    rep.lhs_rank,
                    rep.rhs_rank,
                    rep.max_round_trip,
                    if ok { "" } else { " FAILED" }
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({name}) error {e}"));
            }
        }
    }
    verdict(pass, format!("{} grid points: {}", parts.len(), parts.join("; ")))
}

fn small_objects() -> Vec<CausObject> {
    vec![
        types::unit(),
        fo(2),
        fo(3),
        types::mk_classical(2).unwrap(),
        chan_obj(2, 2),
        types::dual_obj(&fo(2)),
        types::dual_obj(&chan_obj(2, 2)),
    ]
}

fn pick_small<R: Rng + ?Sized>(r: &mut R, max_dim: usize) -> CausObject {
    let objs: Vec<CausObject> = small_objects().into_iter().filter(|o| o.dim() <= max_dim).collect();
    objs.choose(r).unwrap().clone()
}

fn pick_boundary<R: Rng + ?Sized>(r: &mut R, a: &CausObject, max_dim: usize) -> (CausObject, CausObject) {
    probe_boundaries(a, max_dim)
        .choose(r)
        .cloned()
        .unwrap_or_else(|| (types::unit(), types::unit()))
}

fn ac10() -> Verdict {
    let tensor = trials(10, 300, |r, _| {
        let a = pick_small(r, 16);
        let b = pick_small(r, 64 / a.dim());
        let (x1, xo1) = pick_boundary(r, &a, 16);
        let (x2, xo2) = pick_boundary(r, &b, 64 / (a.dim() * x1.dim() * xo1.dim()));
        let i1 = f_eval(&a, &x1, &xo1).map_err(|e| e.to_string())?;
        let i2 = f_eval(&b, &x2, &xo2).map_err(|e| e.to_string())?;
        let (t1, t2) = (i1.random_element(r), i2.random_element(r));
        let (img, t) = lax_tensor(&i1, &t1, &i2, &t2).map_err(|e| e.to_string())?;
        let m = img.membership(&t).map_err(|e| e.to_string())?;
        if m.member {
            Ok(m.affine_residual)
        } else {
            Err(format!("lax_tensor output leaves its type: {m:?}"))
        }
    });
    let seq = trials(11, 300, |r, _| {
        let s = random_shape(r);
        let z = r.random_range(1..=3);
        let w = one_way(r, s, z);
        let out = lax_seq(&w.generating).map_err(|e| e.to_string())?;
        let a = chan_obj(s.a_in, s.a_out);
        let b = chan_obj(s.b_in, s.b_out);
        let img = f_eval(&types::seq_obj(&a, &b), &types::unit(), &types::unit()).map_err(|e| e.to_string())?;
        let m = img.membership(&out).map_err(|e| e.to_string())?;
        if m.member {
            Ok(m.affine_residual)
        } else {
            Err(format!("lax_seq output leaves its type ({s:?}): {m:?}"))
        }
    });
    let inter = trials(12, 300, |r, _| {
        let a = pick_small(r, 16);
        let b = pick_small(r, 16 / a.dim());
        let c = pick_small(r, 64 / (a.dim() * b.dim()));
        let d = pick_small(r, 64 / (a.dim() * b.dim() * c.dim()));
        let sa = random_member(r, &types::seq_obj(&a, &b));
        let sc = random_member(r, &types::seq_obj(&c, &d));
        let m = types::interchange_residual(&sa, &sc, [&a, &b, &c, &d]).map_err(|e| e.to_string())?;
        if m.member {
            Ok(m.affine_residual)
        } else {
            Err(format!("interchange fails: {m:?}"))
        }
    });
    let parts = [
        tally("lax_tensor", &tensor),
        tally("lax_seq", &seq),
        tally("interchange", &inter),
    ];
    verdict(
        parts.iter().all(|v| v.pass),
        parts.iter().map(|v| v.detail.as_str()).collect::<Vec<_>>().join("; "),
    )
}

fn ac11() -> Verdict {
    let tol = Tolerances::default();
    let convex = trials(13, 300, |r, _| {
        let e = random_expr(r, 32, 3);
        let a = elaborate(&e).map_err(|err| err.to_string())?;
        let k = r.random_range(2..=4);
        let w: Vec<f64> = {
            let raw: Vec<f64> = (0..k).map(|_| r.random::<f64>() + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        };
        let mut mix = HermElem::zeros(a.dim());
        for &wk in &w {
            mix = &mix + &random_member(r, &a).scale(wk);
        }
        let m = types::membership(&a, &mix, &tol).map_err(|err| err.to_string())?;
        let residual = m.affine_residual.max(-m.min_eigenvalue).max(0.0);
        if m.member && residual <= 1e-12 {
            Ok(residual)
        } else {
            Err(format!("{e}: {m:?}"))
        }
    });
    let point = trials(14, 100, |r, _| {
        let n = r.random_range(1..=4);
        let d = r.random_range(1..=4);
        let states: Vec<HermElem> = (0..n)
            .map(|_| {
                let rank = r.random_range(1..=d);
                random_density(r, d, rank)
            })
            .collect();
        let c = ctrl(&states).map_err(|e| e.to_string())?;
        let cla = ClassicalObject::new(n).map_err(|e| e.to_string())?;
        for (i, rho) in states.iter().enumerate() {
            let out = c.apply(&cla.point(i)).map_err(|e| e.to_string())?;
            if out.matrix() != rho.matrix() {
                return Err(format!("ctrl(ρ)(i) ≠ ρ_i by {:.2e}", (out.matrix() - rho.matrix()).norm()));
            }
        }
        types::check_morphism(&c, &types::mk_classical(n).unwrap(), &fo(d)).map_err(|e| e.to_string())?;
        Ok(0.0)
    });
    let a = tally("convex mixtures stay members", &convex);
    let b = tally("ctrl point evaluation exact", &point);
    verdict(a.pass && b.pass, format!("{}; {}", a.detail, b.detail))
}

fn fo_e(d: usize) -> TypeExpr {
    TypeExpr::fo(d)
}

fn ac12() -> Verdict {
    let round = trials(15, 1000, |r, _| {
        let e = random_expr(r, 64, 5);
        let printed = e.to_string();
        let back = parse_type(&printed).map_err(|err| format!("`{printed}`: {err}"))?;
        if back != e {
            return Err(format!("`{printed}` reparses to a different tree"));
        }
        if back.to_string() != printed {
            return Err(format!("`{printed}` prints back as `{back}`"));
        }
        Ok(0.0)
    });
    let seq = |a, b| TypeExpr::Seq(Box::new(a), Box::new(b));
    let ten = |a, b| TypeExpr::Tensor(Box::new(a), Box::new(b));
    let par = |a, b| TypeExpr::Par(Box::new(a), Box::new(b));
    let hom = |a, b| TypeExpr::Hom(Box::new(a), Box::new(b));
    let chan = || hom(fo_e(2), fo_e(2));
    let goldens: Vec<(&str, TypeExpr, &str)> = vec![
        ("[FO(2),FO(2)] < [FO(2),FO(2)]", seq(chan(), chan()), "[FO(2), FO(2)] < [FO(2), FO(2)]"),
        ("FO(2)^^", TypeExpr::dual(TypeExpr::dual(fo_e(2))), "FO(2)^^"),
        ("FO(2)*FO(2)@FO(3)", par(ten(fo_e(2), fo_e(2)), fo_e(3)), "FO(2) * FO(2) @ FO(3)"),
        ("FO(2)@FO(2)*FO(3)", par(fo_e(2), ten(fo_e(2), fo_e(3))), "FO(2) @ FO(2) * FO(3)"),
        ("FO(2)<FO(2)*FO(3)", seq(fo_e(2), ten(fo_e(2), fo_e(3))), "FO(2) < FO(2) * FO(3)"),
        ("FO(2)@FO(2)<FO(3)", par(fo_e(2), seq(fo_e(2), fo_e(3))), "FO(2) @ FO(2) < FO(3)"),
        ("FO(2)<FO(3)<FO(4)", seq(seq(fo_e(2), fo_e(3)), fo_e(4)), "FO(2) < FO(3) < FO(4)"),
        ("FO(2)<(FO(3)<FO(4))", seq(fo_e(2), seq(fo_e(3), fo_e(4))), "FO(2) < (FO(3) < FO(4))"),
        ("FO(2)*FO(3)^", ten(fo_e(2), TypeExpr::dual(fo_e(3))), "FO(2) * FO(3)^"),
        ("(FO(2)*FO(3))^", TypeExpr::dual(ten(fo_e(2), fo_e(3))), "(FO(2) * FO(3))^"),
        ("[FO(2),FO(3)]^", TypeExpr::dual(hom(fo_e(2), fo_e(3))), "[FO(2), FO(3)]^"),
        ("FO(2) ⊗ FO(2) ⅋ FO(3)", par(ten(fo_e(2), fo_e(2)), fo_e(3)), "FO(2) * FO(2) @ FO(3)"),
        ("FO(2) ◁ I", seq(fo_e(2), TypeExpr::Atom(Atom::Unit)), "FO(2) < I"),
        ("ANY(3)@CLA(2)", par(TypeExpr::Atom(Atom::Any(3)), TypeExpr::Atom(Atom::Cla(2))), "ANY(3) @ CLA(2)"),
    ];
    let mut failures = Vec::new();
    for (text, tree, canon) in &goldens {
        match parse_type(text) {
            Ok(t) if &t == tree && t.to_string() == *canon => {}
            Ok(t) => failures.push(format!("`{text}` → {t:?} / `{t}`")),
            Err(e) => failures.push(format!("`{text}`: {e}")),
        }
    }
    let errors = [
        ("FO(0)", "semantic error at byte 3: dimensions must be at least 1"),
        ("FO(2", "syntax error at byte 4: expected `)`, found end of input"),
    ];
    for (text, msg) in errors {
        match parse_type(text) {
            Err(e) if e.to_string() == msg => {}
            other => failures.push(format!("`{text}` → {other:?}")),
        }
    }
    let v = tally("print/parse round trips", &round);
    let n = goldens.len() + errors.len();
    let detail = format!(
        "{}; goldens {}/{n}{}",
        v.detail,
        n - failures.len(),
        failures.first().map(|f| format!(" (first failure {f})")).unwrap_or_default()
    );
    verdict(v.pass && failures.is_empty(), detail)
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("AC-1", "duality involution", ac1),
        ("AC-2", "first-order collapse", ac2),
        ("AC-3", "signalling characterizations", ac3),
        ("AC-4", "sequencer round trip", ac4),
        ("AC-5", "◁ definition coherence", ac5),
        ("AC-6", "coend equivalence", ac6),
        ("AC-7", "faithfulness", ac7),
        ("AC-8", "fullness round trip", ac8),
        ("AC-9", "strong closure", ac9),
        ("AC-10", "laxators", ac10),
        ("AC-11", "convexity and ctrl", ac11),
        ("AC-12", "parser", ac12),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{id} {} {name} ({secs:.1}s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/12 criteria pass", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
