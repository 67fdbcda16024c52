#![allow(dead_code)]

use std::fmt::Write as _;

use awdpd_core::RawTable;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Logistic-model table with named covariates `g1..gk`.
pub fn logistic_table(n: usize, slopes: &[f64], seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = slopes.len();
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let y = (0..n)
        .map(|i| {
            let eta: f64 = (0..k).map(|j| columns[j][i] * slopes[j]).sum();
            (rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())) as u8 as f64
        })
        .collect();
    RawTable {
        y,
        names: (1..=k).map(|j| format!("g{j}")).collect(),
        columns,
    }
}

pub fn to_csv(t: &RawTable) -> String {
    let mut s = String::from("y");
    for n in &t.names {
        write!(s, ",{n}").unwrap();
    }
    s.push('\n');
    for i in 0..t.y.len() {
        write!(s, "{}", t.y[i]).unwrap();
        for c in &t.columns {
            write!(s, ",{:e}", c[i]).unwrap();
        }
        s.push('\n');
    }
    s
}

/// A column whose sample correlation with `y` is exactly `r` up to rounding: the
/// centered `y` direction mixed with noise orthogonalized against it.
pub fn planted_column(y: &[f64], r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = y.len();
    let center = |v: DVector<f64>| {
        let m = v.mean();
        v.add_scalar(-m)
    };
    let yc = center(DVector::from_column_slice(y));
    let yu = &yc / yc.norm();
    let z = center(DVector::from_fn(n, |_, _| StandardNormal.sample(&mut *rng)));
    let zo = &z - &yu * yu.dot(&z);
    let zu = &zo / zo.norm();
    (yu * r + zu * (1.0 - r * r).sqrt()).iter().copied().collect()
}
