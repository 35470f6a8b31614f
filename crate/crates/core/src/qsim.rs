//! Dense statevector simulation.
//!
//! Amplitude `i` is the coefficient of the basis state whose qubit `q` is
//! `(i >> q) & 1`, the same convention as [`crate::gf2::BitVec`].

use num_complex::Complex64;
use rand::Rng;

use crate::concepts::BoolFunc;
use crate::error::{Error, Result};
use crate::gf2::BitVec;

pub const DEFAULT_QUBIT_CAP: usize = 14;
pub const NORM_TOLERANCE: f64 = 1e-10;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug)]
pub enum GateOp {
    H(usize),
    X(usize),
    Z(usize),
    /// Inverse phase gate diag(1, -i); `H . Sdg` rotates the Y eigenbasis onto Z.
    Sdg(usize),
    Cnot { control: usize, target: usize },
    /// Diagonal `(-1)^{f(y)}` on every basis state.
    PhaseOracle(BoolFunc),
}

impl GateOp {
    fn validate(&self, n: usize) -> Result<()> {
        let check = |q: usize| {
            if q < n {
                Ok(())
            } else {
                Err(Error::dim(format!("qubit {q} out of range for {n} qubits")))
            }
        };
        match self {
            GateOp::H(q) | GateOp::X(q) | GateOp::Z(q) | GateOp::Sdg(q) => check(*q),
            GateOp::Cnot { control, target } => {
                check(*control)?;
                check(*target)?;
                if control == target {
                    return Err(Error::dim(format!("CNOT control and target are both qubit {control}")));
                }
                Ok(())
            }
            GateOp::PhaseOracle(f) => {
                if f.n() != n {
                    return Err(Error::dim(format!("oracle on {} bits applied to {n} qubits", f.n())));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits, subject to [`DEFAULT_QUBIT_CAP`].
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis_with_cap(n, 0, DEFAULT_QUBIT_CAP)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        Self::basis_with_cap(n, index, DEFAULT_QUBIT_CAP)
    }

    pub fn basis_with_cap(n: usize, index: usize, cap: usize) -> Result<Self> {
        if n > cap {
            return Err(Error::Capacity { what: "statevector", n, cap });
        }
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::dim(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the vector normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::dim(format!("{dim} amplitudes is not a power of two")));
        }
        let n = dim.trailing_zeros() as usize;
        if n > DEFAULT_QUBIT_CAP {
            return Err(Error::Capacity { what: "statevector", n, cap: DEFAULT_QUBIT_CAP });
        }
        let s = StateVector { n, amps };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::dim(format!("state has squared norm {norm}")));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(mut self, op: &GateOp) -> Result<Self> {
        self.apply_mut(op)?;
        Ok(self)
    }

    pub fn apply_all<'a>(&mut self, ops: impl IntoIterator<Item = &'a GateOp>) -> Result<()> {
        for op in ops {
            self.apply_mut(op)?;
        }
        Ok(())
    }

    pub fn apply_mut(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n)?;
        match op {
            GateOp::H(q) => self.hadamard(*q),
            GateOp::X(q) => {
                let bit = 1usize << q;
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        self.amps.swap(i, i | bit);
                    }
                }
            }
            GateOp::Z(q) => {
                let bit = 1usize << q;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a = -*a;
                    }
                }
            }
            GateOp::Sdg(q) => {
                let bit = 1usize << q;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a = Complex64::new(a.im, -a.re);
                    }
                }
            }
            GateOp::Cnot { control, target } => {
                let (c, t) = (1usize << control, 1usize << target);
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            GateOp::PhaseOracle(f) => {
                for (y, a) in self.amps.iter_mut().enumerate() {
                    if f.query(y) {
                        *a = -*a;
                    }
                }
            }
        }
        Ok(())
    }

    /// In-place Hadamard on qubit `q`; no bounds check.
    pub(crate) fn hadamard(&mut self, q: usize) {
        let bit = 1usize << q;
        let s = FRAC_1_SQRT_2;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = (a + b) * s;
                self.amps[i | bit] = (a - b) * s;
            }
        }
    }

    /// Born-rule probabilities `|amp_i|^2`.
    pub fn outcome_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                last_nonzero = i;
            }
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Only reachable through rounding when u lands in the last ulp of mass.
        last_nonzero
    }

    /// Computational-basis measurement outcome as an `n`-bit label.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVec {
        BitVec::from_u64(self.sample_index(rng) as u64, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{prepare_phase_state, BoolFunc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let mut amps: Vec<Complex64> =
            (0..1usize << n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn hadamard_on_zero() {
        let s = StateVector::zero(1).unwrap().apply(&GateOp::H(0)).unwrap();
        assert!(close(s.amplitudes()[0], FRAC_1_SQRT_2, 0.0));
        assert!(close(s.amplitudes()[1], FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn phase_oracle_on_uniform() {
        let f = BoolFunc::from_table(&[false, true]).unwrap();
        let s = StateVector::zero(1).unwrap().apply(&GateOp::H(0)).unwrap().apply(&GateOp::PhaseOracle(f)).unwrap();
        assert!(close(s.amplitudes()[0], FRAC_1_SQRT_2, 0.0));
        assert!(close(s.amplitudes()[1], -FRAC_1_SQRT_2, 0.0));
        assert_eq!(s.outcome_distribution().iter().map(|p| (p * 1e9).round()).collect::<Vec<_>>(), vec![5e8, 5e8]);
    }

    #[test]
    fn cnot_permutes_basis_labels() {
        // |01> with qubit 0 set is index 1; CNOT(0 -> 1) gives index 3.
        let s = StateVector::basis(2, 0b01).unwrap().apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
        assert!(close(s.amplitudes()[0b11], 1.0, 0.0));
        let s = StateVector::basis(2, 0b10).unwrap().apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
        assert!(close(s.amplitudes()[0b10], 1.0, 0.0));
    }

    #[test]
    fn fourier_of_constant_phase_state_is_point_mass() {
        let f = BoolFunc::from_table(&[false; 4]).unwrap();
        let mut s = prepare_phase_state(&f).unwrap();
        s.apply_all(&[GateOp::H(0), GateOp::H(1)]).unwrap();
        let p = s.outcome_distribution();
        assert!((p[0] - 1.0).abs() < 1e-12);
        // Direct matrix product H (x) H applied to the uniform vector.
        let h = [[0.5, 0.5, 0.5, 0.5], [0.5, -0.5, 0.5, -0.5], [0.5, 0.5, -0.5, -0.5], [0.5, -0.5, -0.5, 0.5]];
        let psi = [0.5; 4];
        for (row, amp) in h.iter().zip(s.amplitudes()) {
            let v: f64 = row.iter().zip(&psi).map(|(a, b)| a * b).sum();
            assert!(close(*amp, v, 0.0));
        }
    }

    #[test]
    fn invalid_indices_rejected() {
        let s = StateVector::zero(2).unwrap();
        assert!(matches!(s.clone().apply(&GateOp::H(2)), Err(Error::Dimension(_))));
        assert!(s.clone().apply(&GateOp::Cnot { control: 1, target: 1 }).is_err());
        let f = BoolFunc::from_table(&[false, true]).unwrap();
        assert!(s.apply(&GateOp::PhaseOracle(f)).is_err());
        assert!(matches!(StateVector::zero(15), Err(Error::Capacity { .. })));
    }

    #[test]
    fn point_mass_sampling_and_determinism() {
        let s = StateVector::basis(3, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(s.sample(&mut rng).to_string(), "101");
        }
        let u = StateVector::zero(2).unwrap().apply(&GateOp::H(0)).unwrap().apply(&GateOp::H(1)).unwrap();
        let a: Vec<usize> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| u.sample_index(&mut r)).collect()
        };
        let b: Vec<usize> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| u.sample_index(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let u = StateVector::zero(2).unwrap().apply(&GateOp::H(0)).unwrap().apply(&GateOp::H(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[u.sample_index(&mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn sampling_within_binomial_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_state(3, &mut rng);
        let p = s.outcome_distribution();
        let draws = 200_000;
        let mut counts = vec![0usize; p.len()];
        for _ in 0..draws {
            counts[s.sample_index(&mut rng)] += 1;
        }
        for (c, pi) in counts.iter().zip(&p) {
            let sigma = (pi * (1.0 - pi) / draws as f64).sqrt();
            assert!((*c as f64 / draws as f64 - pi).abs() <= 4.0 * sigma + 1e-12);
        }
    }

    #[test]
    fn norm_preserved_and_involutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=10 {
            let s = random_state(n, &mut rng);
            let table: Vec<bool> = (0..1usize << n).map(|_| rng.random()).collect();
            let f = BoolFunc::from_table(&table).unwrap();
            let q = rng.random_range(0..n);
            let mut ops = vec![GateOp::H(q), GateOp::X(q), GateOp::Z(q), GateOp::PhaseOracle(f)];
            if n > 1 {
                let t = (q + 1 + rng.random_range(0..n - 1)) % n;
                ops.push(GateOp::Cnot { control: q, target: t });
            }
            for op in &ops {
                let once = s.clone().apply(op).unwrap();
                assert!((once.norm_sqr() - 1.0).abs() < 1e-12);
                let twice = once.apply(op).unwrap();
                for (a, b) in twice.amplitudes().iter().zip(s.amplitudes()) {
                    assert!((a - b).norm() < 1e-12, "{op:?} is not an involution");
                }
            }
            let sdg = s.clone().apply(&GateOp::Sdg(q)).unwrap();
            assert!((sdg.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
