//! Brute-force oracle suites run by the `verify` subcommand.
//!
//! Each suite compares a library routine against a direct computation that
//! shares no code path with it, and counts every disagreement.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::concepts::{relation_members, tv_distance, BoolFunc, Distribution};
use crate::fqlearner::build_ux;
use crate::gf2::{dot, rank, solve_system, BitVec, Gf2System, Solution};
use crate::prf::{battery, PrfSpec};
use crate::qsim::{GateOp, StateVector};
use crate::stats::{derive_named, rng_from, SimRng};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    /// First few failure descriptions; `failed` has the full count.
    pub failures: Vec<String>,
    pub failed: usize,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult { name, checks: 0, failures: Vec::new(), failed: 0 }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < 10 {
                self.failures.push(what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn func_from_index(n: usize, k: u64) -> BoolFunc {
    let table: Vec<bool> = (0..1usize << n).map(|y| (k >> y) & 1 == 1).collect();
    BoolFunc::from_table(&table).expect("small table")
}

/// Every function on at most 3 bits, then random functions at the given sizes.
fn function_family(exhaustive_max: usize, random: &[(usize, usize)], rng: &mut SimRng) -> Vec<BoolFunc> {
    let mut out = Vec::new();
    for n in 1..=exhaustive_max {
        for k in 0..1u64 << (1 << n) {
            out.push(func_from_index(n, k));
        }
    }
    for &(n, count) in random {
        for _ in 0..count {
            out.push(BoolFunc::random(n, rng).expect("table fits"));
        }
    }
    out
}

/// `relation_members` against filtering all `(y, b)` by the defining predicate.
pub fn relation_suite(rng: &mut SimRng) -> SuiteResult {
    let mut r = SuiteResult::new("relation");
    for f in function_family(3, &[(10, 1000)], rng) {
        let n = f.n();
        let xs: Vec<u64> = if n <= 3 { (0..1u64 << n).collect() } else { vec![rng.random_range(0..1u64 << n)] };
        for x in xs {
            let xb = BitVec::from_u64(x, n);
            let mut got: Vec<(u64, bool)> = match relation_members(&f, &xb) {
                Ok(v) => v.into_iter().map(|(y, b)| (y.as_u64(), b)).collect(),
                Err(e) => {
                    r.check(false, || format!("n={n} x={x}: {e}"));
                    continue;
                }
            };
            let mut want = Vec::new();
            for y in 0..1u64 << n {
                for b in [false, true] {
                    if b == (f.query(y as usize) != f.query((y ^ x) as usize)) {
                        want.push((y, b));
                    }
                }
            }
            got.sort_unstable();
            r.check(got == want, || format!("n={n} x={x}: relation sets differ"));
        }
    }
    r
}

/// Matching-basis outcome probabilities from the simulated circuit against
/// `|a_y +- a_{y xor x}|^2 / 2` and against `(1 +- (-1)^parity) / N`.
pub fn born_suite(rng: &mut SimRng) -> SuiteResult {
    let mut r = SuiteResult::new("born");
    for f in function_family(3, &[(4, 40), (5, 40), (6, 40)], rng) {
        let n = f.n();
        let big_n = (1u64 << n) as f64;
        let psi = crate::concepts::prepare_phase_state(&f).expect("small state");
        for x in 1..1u64 << n {
            let circuit = build_ux(&BitVec::from_u64(x, n)).expect("x nonzero");
            let out = circuit.final_state(&f).expect("small state").outcome_distribution();
            // (edge representative, b) -> probability
            let mut measured = std::collections::BTreeMap::<(u64, bool), f64>::new();
            for (w, &p) in out.iter().enumerate() {
                let (y0, b) = circuit.decode(w);
                let y0 = y0 as u64;
                *measured.entry((y0.min(y0 ^ x), b)).or_default() += p;
            }
            let mut invalid = 0.0;
            for y in (0..1u64 << n).filter(|&y| y < y ^ x) {
                let (ay, az) = (psi.amplitudes()[y as usize], psi.amplitudes()[(y ^ x) as usize]);
                let plus = (ay + az).norm_sqr() / 2.0;
                let minus = (ay - az).norm_sqr() / 2.0;
                let sign = if f.query(y as usize) != f.query((y ^ x) as usize) { -1.0 } else { 1.0 };
                let (mp, mm) = (measured.get(&(y, false)).copied().unwrap_or(0.0), measured.get(&(y, true)).copied().unwrap_or(0.0));
                r.check((mp - plus).abs() <= 1e-9 && (mm - minus).abs() <= 1e-9, || {
                    format!("n={n} x={x} y={y}: circuit ({mp}, {mm}) vs projector ({plus}, {minus})")
                });
                r.check(
                    (mp - (1.0 + sign) / big_n).abs() <= 1e-9 && (mm - (1.0 - sign) / big_n).abs() <= 1e-9,
                    || format!("n={n} x={x} y={y}: circuit ({mp}, {mm}) vs closed form"),
                );
                if sign > 0.0 {
                    invalid += mm;
                } else {
                    invalid += mp;
                }
            }
            r.check(invalid < 1e-12, || format!("n={n} x={x}: invalid mass {invalid}"));
        }
    }
    r
}

fn random_state(n: usize, rng: &mut SimRng) -> StateVector {
    let mut amps: Vec<Complex64> =
        (0..1 << n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps).expect("normalized")
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Gate sequences preserve the norm; H, X, Z and CNOT square to the
/// identity; `Sdg` has order four.
pub fn statevector_suite(rng: &mut SimRng) -> SuiteResult {
    let mut r = SuiteResult::new("statevector");
    for _ in 0..200 {
        let n = rng.random_range(1..=10);
        let psi = random_state(n, rng);
        let q = rng.random_range(0..n);
        let mut ops = vec![(GateOp::H(q), 2), (GateOp::X(q), 2), (GateOp::Z(q), 2), (GateOp::Sdg(q), 4)];
        if n > 1 {
            let t = (q + rng.random_range(1..n)) % n;
            ops.push((GateOp::Cnot { control: q, target: t }, 2));
        }
        let f = BoolFunc::random(n, rng).expect("small");
        ops.push((GateOp::PhaseOracle(f), 2));
        for (op, order) in &ops {
            let mut s = psi.clone();
            for _ in 0..*order {
                s.apply_mut(op).expect("valid gate");
                r.check((s.norm_sqr() - 1.0).abs() <= 1e-10, || format!("n={n} {op:?}: norm drift"));
            }
            r.check(max_diff(&s, &psi) <= 1e-10, || format!("n={n} {op:?}^{order} != I"));
        }
    }
    r
}

fn random_distribution(width: usize, rng: &mut SimRng) -> Distribution {
    let raw: Vec<f64> = (0..1 << width).map(|_| if rng.random_bool(0.5) { rng.random::<f64>() } else { 0.0 }).collect();
    let total: f64 = raw.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let mut d = Distribution::new(width);
    if raw.iter().all(|&p| p == 0.0) {
        d.add(0, 1.0);
        return d;
    }
    for (k, p) in raw.iter().enumerate() {
        if *p > 0.0 {
            d.add(k as u64, p / total);
        }
    }
    d
}

/// TV is a metric bounded by 1.
pub fn tv_suite(rng: &mut SimRng) -> SuiteResult {
    let mut r = SuiteResult::new("tv-metric");
    for _ in 0..500 {
        let w = rng.random_range(1..=7);
        let (p, q, s) = (random_distribution(w, rng), random_distribution(w, rng), random_distribution(w, rng));
        let d = |a: &Distribution, b: &Distribution| tv_distance(a, b).expect("same width");
        let (pq, qp, ps, sq) = (d(&p, &q), d(&q, &p), d(&p, &s), d(&s, &q));
        r.check(d(&p, &p) == 0.0, || "TV(p, p) != 0".into());
        r.check((pq - qp).abs() <= 1e-12, || format!("asymmetric: {pq} vs {qp}"));
        r.check(pq <= ps + sq + 1e-12, || format!("triangle: {pq} > {ps} + {sq}"));
        r.check((0.0..=1.0).contains(&pq), || format!("out of range: {pq}"));
    }
    r
}

/// Inner product bilinearity, rank invariance under row operations, and
/// resubstitution of unique solutions.
pub fn gf2_suite(rng: &mut SimRng) -> SuiteResult {
    let mut r = SuiteResult::new("gf2");
    for _ in 0..2000 {
        let len = rng.random_range(1..=200);
        let (a, b, c) = (BitVec::random(len, rng), BitVec::random(len, rng), BitVec::random(len, rng));
        let lhs = dot(&a.xor(&b).unwrap(), &c).unwrap();
        r.check(lhs == dot(&a, &c).unwrap() ^ dot(&b, &c).unwrap(), || format!("bilinearity at len {len}"));
    }
    for _ in 0..500 {
        let n = rng.random_range(1..=24);
        let rows: Vec<BitVec> = (0..rng.random_range(1..=n + 4)).map(|_| BitVec::random(n, rng)).collect();
        let before = rank(&rows).unwrap();
        let mut mixed = rows.clone();
        for _ in 0..10 {
            let (i, j) = (rng.random_range(0..mixed.len()), rng.random_range(0..mixed.len()));
            if i != j {
                let src = mixed[j].clone();
                mixed[i].xor_assign(&src);
            }
            let k = rng.random_range(0..mixed.len());
            mixed.swap(i, k);
        }
        r.check(rank(&mixed).unwrap() == before, || format!("rank changed under row ops at n={n}"));
        r.check(before <= n.min(rows.len()), || format!("rank {before} exceeds shape"));
        let secret = BitVec::random(n, rng);
        let sys = Gf2System::from_rows(n, rows.iter().map(|row| (row.clone(), dot(row, &secret).unwrap())).collect()).unwrap();
        match solve_system(&sys).unwrap() {
            Solution::Unique(s) => {
                r.check(before == n, || "unique solution from a deficient system".into());
                r.check(s == secret, || format!("wrong solution at n={n}"));
            }
            Solution::Underdetermined { rank: k } => r.check(k == before && k < n, || "bad underdetermined rank".into()),
            Solution::Inconsistent => r.check(false, || "consistent system reported inconsistent".into()),
        }
    }
    r
}

/// Balance, avalanche and key/input correlation within 4 sigma at 10^5 samples.
pub fn prf_suite(rng: &mut SimRng) -> SuiteResult {
    let mut r = SuiteResult::new("prf-battery");
    for n in [8, 16, 32] {
        let report = battery(&PrfSpec::default(), n, 100_000, rng);
        r.check(report.passes(4.0), || format!("n={n}: {report:?}"));
    }
    r
}

/// Every suite, each on its own named stream under `seed`.
pub fn run_all(seed: u64) -> VerifyReport {
    type Suite = fn(&mut SimRng) -> SuiteResult;
    let suites: [(&str, Suite); 6] = [
        ("relation", relation_suite),
        ("born", born_suite),
        ("statevector", statevector_suite),
        ("tv-metric", tv_suite),
        ("gf2", gf2_suite),
        ("prf-battery", prf_suite),
    ];
    VerifyReport {
        seed,
        suites: suites.iter().map(|(name, run)| run(&mut rng_from(derive_named(seed, name)))).collect(),
    }
}
