#![allow(dead_code)]

use hdforecast::frame::{Quarter, Series, SeriesFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn q(s: &str) -> Quarter {
    s.parse().unwrap()
}

/// Quarterly panel from 1978q2 to 2023q1 whose transformed columns are
/// observed from 1979q2 on, mimicking the warm-up of four-quarter rates.
/// Holds DPUK4/DPSUK4 with their differences plus `extra` noise covariates
/// and their differences.
pub fn synthetic_frame(seed: u64, extra: usize) -> SeriesFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = q("1978q2");
    let len = start.span_len(q("2023q1"));
    let warm = 4;
    let ar = |phi: f64, mu: f64, rng: &mut ChaCha8Rng| {
        let mut v = vec![mu; len];
        for t in 1..len {
            v[t] = mu + phi * (v[t - 1] - mu) + 0.5 * rng.sample::<f64, _>(StandardNormal);
        }
        v
    };
    let pistar = ar(0.8, 2.5, &mut rng);
    let noise: Vec<f64> = (0..len).map(|_| 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut pi = vec![3.0; len];
    for t in 1..len {
        pi[t] = 0.6 + 0.6 * pi[t - 1] + 0.2 * pistar[t - 1] + noise[t];
    }
    let mut frame = SeriesFrame::new(start, len);
    let mut put = |name: String, v: &[f64], head: usize| {
        let vals = v.iter().enumerate().map(|(i, x)| (i >= head).then_some(*x)).collect();
        frame.insert(name, Series::new(start, vals).unwrap()).unwrap();
    };
    let diff = |v: &[f64]| -> Vec<f64> { (0..v.len()).map(|i| if i == 0 { 0.0 } else { v[i] - v[i - 1] }).collect() };
    put("DPUK4".into(), &pi, warm);
    put("DDPUK4".into(), &diff(&pi), warm);
    put("DPSUK4".into(), &pistar, warm);
    put("DDPSUK4".into(), &diff(&pistar), warm);
    for j in 0..extra {
        let x = ar(0.5, 0.0, &mut rng);
        put(format!("X{j}"), &x, warm);
        put(format!("DX{j}"), &diff(&x), warm);
    }
    frame
}

pub fn active_names(frame: &SeriesFrame) -> Vec<String> {
    frame.names().map(str::to_string).collect()
}
