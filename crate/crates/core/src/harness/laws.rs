//! Randomized law checks for `F`, reported as one record per law per trial.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::families::{depolarizing, random_morphism, Shape};
use super::*;
use crate::cp::ctrl;
use crate::dsl::{elaborate, random_expr};
use crate::random::{
    random_channel, random_density, random_member, random_nonsignalling, random_one_way, random_one_way_reversed,
    random_two_way, Rng64, TwoParty,
};
use crate::signalling::{coend_equiv, nonsignalling_test, Cut, Signalling};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Empty,
    Small,
    Medium,
}

impl Budget {
    pub fn trials(self) -> usize {
        match self {
            Budget::Empty => 0,
            Budget::Small => 3,
            Budget::Medium => 12,
        }
    }
}

impl FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "empty" => Ok(Budget::Empty),
            "small" => Ok(Budget::Small),
            "medium" => Ok(Budget::Medium),
            _ => Err(format!("unknown budget `{s}` (expected empty, small or medium)")),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Budget::Empty => "empty",
            Budget::Small => "small",
            Budget::Medium => "medium",
        })
    }
}

/// One line of the report.
#[derive(Clone, Debug, Serialize)]
pub struct LawRecord {
    pub law: String,
    pub seed: u64,
    pub digest: String,
    pub pass: bool,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

/// Result of a single trial before it is stamped with seed and digest.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub residual: f64,
    pub instance: String,
    pub counterexample: Option<Value>,
}

impl Outcome {
    fn within(residual: f64, tol: f64, instance: String) -> Self {
        let pass = residual <= tol;
        Outcome {
            pass,
            residual,
            counterexample: (!pass).then(|| json!({ "instance": instance, "residual": residual, "tolerance": tol })),
            instance,
        }
    }

    fn verdict(pass: bool, residual: f64, instance: String, detail: Value) -> Self {
        Outcome {
            pass,
            residual,
            counterexample: (!pass).then(|| json!({ "instance": instance, "detail": detail })),
            instance,
        }
    }
}

pub type LawFn = fn(&mut Rng64, usize) -> Result<Outcome, HarnessError>;

/// Every law, in report order.
pub const LAWS: &[(&str, LawFn)] = &[
    ("functoriality_identity", functoriality_identity),
    ("functoriality_composition", functoriality_composition),
    ("naturality", naturality),
    ("strength", strength_square),
    ("lax_tensor_membership", lax_tensor_membership),
    ("lax_tensor_naturality", lax_tensor_naturality),
    ("lax_seq", lax_seq_law),
    ("interchange", interchange),
    ("injectivity", injectivity),
    ("faithfulness", faithfulness),
    ("fullness_round_trip", fullness_round_trip),
    ("fullness_adversarial", fullness_adversarial),
    ("strong_closure", strong_closure),
    ("convexity", convexity),
    ("ctrl", ctrl_law),
    ("duality_involution", duality_involution),
    ("first_order_collapse", first_order_collapse),
    ("signalling_characterization", signalling_characterization),
    ("sequencing_coherence", sequencing_coherence),
];

/// Seed of trial `trial` of law number `law`, derived from the suite seed.
pub fn trial_seed(seed: u64, law: usize, trial: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((law as u64).to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("eight bytes"))
}

fn digest(instance: &str) -> String {
    let d = Sha256::digest(instance.as_bytes());
    d[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one trial of one law from its own seed.
pub fn run_trial(law: usize, seed: u64, trial: usize) -> LawRecord {
    let (name, f) = LAWS[law];
    let mut r = rng(seed);
    let outcome = match f(&mut r, trial) {
        Ok(o) => o,
        Err(e) => Outcome {
            pass: false,
            residual: f64::INFINITY,
            instance: format!("error: {e}"),
            counterexample: Some(json!({ "error": e.to_string() })),
        },
    };
    LawRecord {
        law: name.to_string(),
        seed,
        digest: digest(&outcome.instance),
        pass: outcome.pass,
        residual: outcome.residual,
        counterexample: outcome.counterexample,
    }
}

/// Runs every law `budget.trials()` times. Trials run in parallel; records
/// come back in law order, then trial order.
pub fn law_suite(seed: u64, budget: Budget) -> Vec<LawRecord> {
    let n = budget.trials();
    let jobs: Vec<(usize, usize)> = (0..LAWS.len()).flat_map(|l| (0..n).map(move |t| (l, t))).collect();
    jobs.par_iter()
        .map(|&(l, t)| run_trial(l, trial_seed(seed, l, t), t))
        .collect()
}

fn fo(d: usize) -> CausObject {
    types::mk_first_order(d).expect("positive dimension")
}

fn chan() -> CausObject {
    types::hom_obj(&fo(2), &fo(2))
}

fn pick_boundary<R: Rng + ?Sized>(rng: &mut R, a: &CausObject, max_dim: usize) -> (CausObject, CausObject) {
    probe_boundaries(a, max_dim)
        .choose(rng)
        .cloned()
        .unwrap_or_else(|| (types::unit(), types::unit()))
}

fn pick_shape<R: Rng + ?Sized>(rng: &mut R) -> Shape {
    *Shape::ALL.choose(rng).expect("non-empty")
}

fn dims_str(o: &CausObject) -> String {
    format!("{:?}", o.factor_dims())
}

/// A first-order morphism `x → y` from a random channel.
fn channel_between<R: Rng + ?Sized>(rng: &mut R, x: &CausObject, y: &CausObject) -> Result<CausMorphism, HarnessError> {
    let k = rng.random_range(1..=2);
    let m = random_channel(rng, &x.factor_dims(), &y.factor_dims(), k);
    Ok(types::check_morphism(&m, x, y)?)
}

fn functoriality_identity(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let shape = pick_shape(rng);
    let a = random_morphism(rng, shape).source().clone();
    let (x, xo) = pick_boundary(rng, &a, 32);
    let tau = f_eval(&a, &x, &xo)?.random_element(rng);
    let r = f_mor(&CausMorphism::identity(&a), &tau)?.distance(&tau);
    Ok(Outcome::within(r, 1e-10, format!("{shape:?} X={} X'={}", dims_str(&x), dims_str(&xo))))
}

fn functoriality_composition(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let (f, g, label) = if rng.random_bool(0.5) {
        let f = random_morphism(rng, Shape::FoFo);
        let c = fo(rng.random_range(2..=3));
        let g = channel_between(rng, f.target(), &c)?;
        (f, g, "channels")
    } else {
        let f = random_morphism(rng, Shape::HomHom);
        let g = random_morphism(rng, Shape::HomTensor);
        (f, g, "superchannel then evaluation")
    };
    let (x, xo) = pick_boundary(rng, f.source(), 16);
    let tau = f_eval(f.source(), &x, &xo)?.random_element(rng);
    let gf = g.after(&f)?;
    let lhs = f_mor(&gf, &tau)?;
    let rhs = f_mor(&g, &f_mor(&f, &tau)?)?;
    Ok(Outcome::within(
        lhs.distance(&rhs),
        1e-10,
        format!("{label} X={} X'={}", dims_str(&x), dims_str(&xo)),
    ))
}

fn naturality(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let shape = pick_shape(rng);
    let f = random_morphism(rng, shape);
    let (x, xo) = pick_boundary(rng, f.source(), 16);
    let pool = boundary_pool();
    let x2 = pool.choose(rng).expect("non-empty").clone();
    let xo2 = pool.choose(rng).expect("non-empty").clone();
    let g = channel_between(rng, &x2, &x)?;
    let h = channel_between(rng, &xo, &xo2)?;
    let tau = f_eval(f.source(), &x, &xo)?.random_element(rng);
    let lhs = f_mor(&f, &profunctor_action(&tau, &g, &h)?)?;
    let rhs = profunctor_action(&f_mor(&f, &tau)?, &g, &h)?;
    let instance = format!(
        "{shape:?} X={} X'={} X2={} X2'={}",
        dims_str(&x),
        dims_str(&xo),
        dims_str(&x2),
        dims_str(&xo2)
    );
    Ok(Outcome::within(lhs.distance(&rhs), 1e-9, instance))
}

fn strength_square(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let shape = pick_shape(rng);
    let f = random_morphism(rng, shape);
    let (x, xo) = pick_boundary(rng, f.source(), 8);
    let (y, yo) = (fo(rng.random_range(1..=2)), fo(rng.random_range(1..=2)));
    let k = channel_between(rng, &y, &yo)?;
    let tau = f_eval(f.source(), &x, &xo)?.random_element(rng);
    let st = strength(&tau, &k);
    let lhs = f_mor(&f, &st)?;
    let rhs = strength(&f_mor(&f, &tau)?, &k);
    let mut residual = lhs.distance(&rhs);
    let big = f_eval(f.source(), &types::tensor_obj(&x, &y), &types::tensor_obj(&xo, &yo))?;
    if big.carrier.dim() <= 64 {
        let m = big.membership(&st.regroup(big.in_dims(), big.out_dims())?)?;
        if !m.member {
            residual = residual.max(m.affine_residual).max(-m.min_eigenvalue);
            residual = residual.max(1.0);
        }
    }
    let instance = format!(
        "{shape:?} X={} X'={} Y={} Y'={}",
        dims_str(&x),
        dims_str(&xo),
        dims_str(&y),
        dims_str(&yo)
    );
    Ok(Outcome::within(residual, 1e-9, instance))
}

/// Small objects for tensor-type laws, with their DSL names.
fn small_objects() -> Vec<(&'static str, CausObject)> {
    vec![
        ("I", types::unit()),
        ("FO(2)", fo(2)),
        ("CLA(2)", types::mk_classical(2).expect("positive")),
        ("[FO(2), FO(2)]", chan()),
        ("FO(2)^", types::dual_obj(&fo(2))),
    ]
}

fn lax_tensor_membership(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let objs = small_objects();
    let (na, a) = objs.choose(rng).expect("non-empty").clone();
    let (nb, b) = objs.choose(rng).expect("non-empty").clone();
    let (x1, xo1) = pick_boundary(rng, &a, 8);
    let (x2, xo2) = pick_boundary(rng, &b, 64 / (a.dim() * x1.dim() * xo1.dim()).max(1));
    let i1 = f_eval(&a, &x1, &xo1)?;
    let i2 = f_eval(&b, &x2, &xo2)?;
    let (t1, t2) = (i1.random_element(rng), i2.random_element(rng));
    let (img, t) = lax_tensor(&i1, &t1, &i2, &t2)?;
    let m = img.membership(&t)?;
    let instance = format!(
        "{na} ⊗ {nb} X1={} X1'={} X2={} X2'={}",
        dims_str(&x1),
        dims_str(&xo1),
        dims_str(&x2),
        dims_str(&xo2)
    );
    Ok(Outcome::verdict(
        m.member,
        m.affine_residual,
        instance,
        json!({ "min_eigenvalue": m.min_eigenvalue, "affine_residual": m.affine_residual }),
    ))
}

fn lax_tensor_naturality(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let shape = if rng.random_bool(0.5) { Shape::FoFo } else { Shape::HomTensor };
    let f = random_morphism(rng, shape);
    let objs = small_objects();
    let (nb, b) = objs[..4].choose(rng).expect("non-empty").clone();
    let (x1, xo1) = pick_boundary(rng, f.source(), 4);
    let (x2, xo2) = pick_boundary(rng, &b, 4);
    let i1 = f_eval(f.source(), &x1, &xo1)?;
    let i2 = f_eval(&b, &x2, &xo2)?;
    let (t1, t2) = (i1.random_element(rng), i2.random_element(rng));
    let j1 = f_eval(f.target(), &x1, &xo1)?;
    let (_, lhs) = lax_tensor(&j1, &f_mor(&f, &t1)?, &i2, &t2)?;
    let (_, prod) = lax_tensor(&i1, &t1, &i2, &t2)?;
    let fb = types::check_morphism(
        &f.map().tensor(CausMorphism::identity(&b).map()),
        &types::tensor_obj(f.source(), &b),
        &types::tensor_obj(f.target(), &b),
    )?;
    let rhs = f_mor(&fb, &prod)?;
    let instance = format!("{shape:?} ⊗ {nb} X1={} X2={}", dims_str(&x1), dims_str(&x2));
    Ok(Outcome::within(lhs.distance(&rhs), 1e-9, instance))
}

/// A random two-party qubit channel read as an element of
/// `F([FO2,FO2] ◁ [FO2,FO2])(I, I)`, factors `[A_in, A_out, B_in, B_out]`.
fn channel_as_comb(tau: &ChoiMap) -> Result<ChoiMap, HarnessError> {
    let state = tau.hom_state().permute_factors(&[2, 2, 2, 2], &[0, 2, 1, 3])?;
    Ok(ChoiMap::from_state(&state, vec![2, 2, 2, 2])?)
}

fn lax_seq_law(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let z = rng.random_range(1..=3);
    let tau = channel_as_comb(&random_one_way(rng, TwoParty::QUBITS, z))?;
    let c = chan();
    let split = SeqSplit::new(vec![1], c.clone(), c.clone(), vec![1]);
    let pair = inverse_seq(&tau, &split)?;
    let back = lax_seq(&pair)?;
    let img = f_eval(&types::seq_obj(&c, &c), &types::unit(), &types::unit())?;
    let m = img.membership(&back)?;
    let round_trip = back.distance(&tau.regroup(vec![1], split.out_dims())?);
    let pair2 = inverse_seq(&back, &split)?;
    let equiv = coend_equiv(&pair, &pair2)?;
    let pass = m.member && round_trip <= 1e-8 && equiv;
    Ok(Outcome::verdict(
        pass,
        round_trip.max(m.affine_residual),
        format!("one-way qubit comb, mediator {z}"),
        json!({ "member": m.member, "round_trip": round_trip, "coend_equiv": equiv }),
    ))
}

fn interchange(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let objs = small_objects();
    let mut pick = || objs[..3].choose(rng).expect("non-empty").clone();
    let (na, a) = pick();
    let (nb, b) = pick();
    let (nc, c) = pick();
    let (nd, d) = pick();
    let ab = types::seq_obj(&a, &b);
    let cd = types::seq_obj(&c, &d);
    let sa = random_member(rng, &ab);
    let sc = random_member(rng, &cd);
    let m = types::interchange_residual(&sa, &sc, [&a, &b, &c, &d])?;
    Ok(Outcome::verdict(
        m.member,
        m.affine_residual,
        format!("({na} ◁ {nb}) ⊗ ({nc} ◁ {nd})"),
        json!({ "min_eigenvalue": m.min_eigenvalue, "affine_residual": m.affine_residual }),
    ))
}

/// `F(A)(I, |A|)`, whose state set determines `A`.
fn cup_carrier(a: &CausObject) -> Result<CausObject, HarnessError> {
    Ok(f_eval(a, &types::unit(), &types::mk_all_states(a))?.carrier)
}

fn injectivity(rng: &mut Rng64, trial: usize) -> Result<Outcome, HarnessError> {
    let ea = random_expr(rng, 8, 3);
    let eb = if trial.is_multiple_of(3) {
        ea.clone()
    } else {
        let mut e = random_expr(rng, 8, 3);
        for _ in 0..20 {
            if e.dim() == ea.dim() {
                break;
            }
            e = random_expr(rng, 8, 3);
        }
        e
    };
    let (a, b) = (elaborate(&ea)?, elaborate(&eb)?);
    let same_object = a.distance_to(&b) <= 1e-9;
    let (ca, cb) = (cup_carrier(&a)?, cup_carrier(&b)?);
    let carrier_distance = ca.aff_states().distance_to(cb.aff_states());
    let same_image = carrier_distance <= 1e-9;
    Ok(Outcome::verdict(
        same_object == same_image,
        if same_object { carrier_distance } else { 0.0 },
        format!("{ea} vs {eb}"),
        json!({ "objects_equal": same_object, "images_equal": same_image, "carrier_distance": carrier_distance }),
    ))
}

fn faithfulness(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let shape = pick_shape(rng);
    let f = random_morphism(rng, shape);
    let g = loop {
        let g = random_morphism(rng, shape);
        if g.source().factor_dims() == f.source().factor_dims() && g.target().factor_dims() == f.target().factor_dims() {
            break g;
        }
    };
    let choi_distance = f.map().distance(g.map());
    let distinguished = faithfulness_probe(&f, &g)?;
    let pass = distinguished == (choi_distance > FAITHFUL_TOL);
    Ok(Outcome::verdict(
        pass,
        probe_distance(&f, &g)?,
        format!("{shape:?}"),
        json!({ "choi_distance": choi_distance, "distinguished": distinguished }),
    ))
}

fn fullness_round_trip(rng: &mut Rng64, trial: usize) -> Result<Outcome, HarnessError> {
    let shape = Shape::ALL[trial % Shape::ALL.len()];
    let h = random_morphism(rng, shape);
    let seed = rng.random();
    match fullness_reconstruct(&BlackBoxTransform::of_morphism(&h), seed, 1)? {
        Reconstruction::Recovered { morphism, .. } => {
            Ok(Outcome::within(morphism.map().distance(h.map()), FULLNESS_TOL, format!("{shape:?}")))
        }
        Reconstruction::NotInImage { reason, .. } => Ok(Outcome::verdict(
            false,
            f64::INFINITY,
            format!("{shape:?}"),
            serde_json::to_value(reason).unwrap_or(Value::Null),
        )),
    }
}

/// The standard adversarial black boxes on `FO(2)`.
pub fn adversarial_scripts() -> Vec<(&'static str, ProbeScript)> {
    let id = crate::cp::identity_map(&[2]).choi().clone();
    let dep = depolarizing(2, 0.5).choi().clone();
    vec![
        ("partial_transpose", ProbeScript::PartialTranspose),
        ("boundary_dependent", ProbeScript::BoundaryDependent { at_unit: id.clone(), elsewhere: dep.clone() }),
        ("nonlinear", ProbeScript::Nonlinear { choi: dep }),
        ("scaled", ProbeScript::Scaled { factor: 2.0, choi: id }),
    ]
}

fn fullness_adversarial(rng: &mut Rng64, trial: usize) -> Result<Outcome, HarnessError> {
    let scripts = adversarial_scripts();
    let (name, script) = scripts[trial % scripts.len()].clone();
    let a = fo(2);
    let bb = script.into_transform(&a, &a)?;
    let rec = fullness_reconstruct(&bb, rng.random(), 2)?;
    let detail = match &rec {
        Reconstruction::NotInImage { reason, .. } => serde_json::to_value(reason).unwrap_or(Value::Null),
        Reconstruction::Recovered { .. } => json!("accepted"),
    };
    Ok(Outcome::verdict(!rec.is_recovered(), 0.0, name.to_string(), detail))
}

/// The fixed strong-closure grid `(A, B, X, X')`, total dimension ≤ 64.
pub fn closure_grid() -> Vec<(&'static str, [CausObject; 4])> {
    let u = types::unit;
    let two = || types::tensor_obj(&fo(2), &fo(2));
    vec![
        ("I, I, I, I", [u(), u(), u(), u()]),
        ("FO(2), FO(2), I, I", [fo(2), fo(2), u(), u()]),
        ("FO(2), FO(3), FO(2), I", [fo(2), fo(3), fo(2), u()]),
        ("FO(2), FO(2), FO(2), FO(2)", [fo(2), fo(2), fo(2), fo(2)]),
        ("[FO(2),FO(2)], FO(2), I, FO(2)", [chan(), fo(2), u(), fo(2)]),
        ("CLA(2), [FO(2),FO(2)], FO(2), I", [types::mk_classical(2).expect("positive"), chan(), fo(2), u()]),
        ("[FO(2),FO(2)], FO(2)*FO(2), FO(2), FO(2)", [chan(), two(), fo(2), fo(2)]),
    ]
}

fn strong_closure(rng: &mut Rng64, trial: usize) -> Result<Outcome, HarnessError> {
    let grid = closure_grid();
    let (name, [a, b, x, xo]) = &grid[trial % grid.len()];
    let rep = strong_closure_check(a, b, x, xo, 10, rng.random())?;
    Ok(Outcome::verdict(
        rep.pass,
        rep.max_round_trip.max(rep.hull_distance),
        name.to_string(),
        serde_json::to_value(&rep).unwrap_or(Value::Null),
    ))
}

fn convexity(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let e = random_expr(rng, 16, 3);
    let a = elaborate(&e)?;
    let (s1, s2) = (random_member(rng, &a), random_member(rng, &a));
    let t: f64 = rng.random();
    let mix = &s1.scale(t) + &s2.scale(1.0 - t);
    let m = types::membership(&a, &mix, &Tolerances::default())?;
    let residual = m.affine_residual.max(-m.min_eigenvalue);
    Ok(Outcome::verdict(
        m.member && residual <= 1e-12,
        residual,
        e.to_string(),
        json!({ "min_eigenvalue": m.min_eigenvalue, "affine_residual": m.affine_residual }),
    ))
}

fn ctrl_law(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let n = rng.random_range(1..=4);
    let d = rng.random_range(1..=3);
    let states: Vec<HermElem> = (0..n).map(|_| random_density(rng, d, d)).collect();
    let c = ctrl(&states)?;
    let cla = crate::cp::ClassicalObject::new(n)?;
    let mut residual: f64 = 0.0;
    for (i, rho) in states.iter().enumerate() {
        let out = c.apply(&cla.point(i))?;
        residual = residual.max((out.matrix() - rho.matrix()).norm());
    }
    let typed = types::check_morphism(&c, &types::mk_classical(n)?, &fo(d)).is_ok();
    Ok(Outcome::verdict(
        residual == 0.0 && typed,
        residual,
        format!("ctrl of {n} states on {d}"),
        json!({ "typed": typed }),
    ))
}

fn duality_involution(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let e = random_expr(rng, 16, 4);
    let a = elaborate(&e)?;
    let r = types::dual_obj(&types::dual_obj(&a)).distance_to(&a);
    Ok(Outcome::within(r, 1e-9, e.to_string()))
}

fn first_order_collapse(rng: &mut Rng64, _: usize) -> Result<Outcome, HarnessError> {
    let pool = boundary_pool();
    let x = pool.choose(rng).expect("non-empty").clone();
    let y = pool.choose(rng).expect("non-empty").clone();
    let e = random_expr(rng, 4, 2);
    let a = elaborate(&e)?;
    let t = types::tensor_obj(&x, &y);
    let r1 = t.distance_to(&types::seq_obj(&x, &y));
    let r2 = t.distance_to(&types::par_obj(&x, &y));
    let r3 = types::seq_obj(&a, &x).distance_to(&types::par_obj(&a, &x));
    Ok(Outcome::within(
        r1.max(r2).max(r3),
        1e-9,
        format!("X={} Y={} A={e}", dims_str(&x), dims_str(&y)),
    ))
}

/// A random qubit two-party channel of a random signalling class.
pub fn random_two_party<R: Rng + ?Sized>(rng: &mut R, class: usize) -> ChoiMap {
    let s = TwoParty::QUBITS;
    match class % 4 {
        0 => random_nonsignalling(rng, s, 3),
        1 => random_one_way(rng, s, 2),
        2 => random_one_way_reversed(rng, s, 2),
        _ => random_two_way(rng, s),
    }
}

/// Membership of a two-party channel in the `⊗`, `◁` and `⅋` products of
/// two qubit channel types.
pub fn product_memberships(tau: &ChoiMap) -> Result<[bool; 3], HarnessError> {
    let c = chan();
    let elem = channel_as_comb(tau)?;
    let state = elem.choi();
    Ok([
        types::member(&types::tensor_obj(&c, &c), state),
        types::member(&types::seq_obj(&c, &c), state),
        types::member(&types::par_obj(&c, &c), state),
    ])
}

fn signalling_characterization(rng: &mut Rng64, trial: usize) -> Result<Outcome, HarnessError> {
    let tau = random_two_party(rng, trial);
    let class = nonsignalling_test(&tau, &Cut::leading(&tau, 1, 1))?.class;
    let got = product_memberships(&tau)?;
    let want = [class == Signalling::Both, class.is_one_way(), true];
    Ok(Outcome::verdict(
        got == want,
        0.0,
        format!("class {}", class.as_str()),
        json!({ "memberships": got, "expected": want }),
    ))
}

fn sequencing_coherence(rng: &mut Rng64, trial: usize) -> Result<Outcome, HarnessError> {
    let c = chan();
    let split = SeqSplit::new(vec![1], c.clone(), c.clone(), vec![1]);
    let tau = channel_as_comb(&random_two_party(rng, trial))?;
    let linear = types::member(&split.carrier()?, tau.choi());
    let decomposes = inverse_seq(&tau, &split).is_ok();
    Ok(Outcome::verdict(
        linear == decomposes,
        0.0,
        format!("class {}", trial % 4),
        json!({ "linear_test": linear, "decomposes": decomposes }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_budget_is_empty() {
        assert!(law_suite(1, Budget::Empty).is_empty());
    }

    #[test]
    fn every_law_passes_once() {
        for (l, (name, _)) in LAWS.iter().enumerate() {
            for t in 0..2 {
                let rec = run_trial(l, trial_seed(11, l, t), t);
                assert!(rec.pass, "{name}: {rec:?}");
            }
        }
    }

    #[test]
    fn records_are_reproducible() {
        let a = run_trial(3, 99, 0);
        let b = run_trial(3, 99, 0);
        assert_eq!(a.digest, b.digest);
        assert_eq!(a.residual, b.residual);
    }

    #[test]
    fn budget_parses() {
        assert_eq!("small".parse::<Budget>().unwrap(), Budget::Small);
        assert!("huge".parse::<Budget>().is_err());
    }
}
