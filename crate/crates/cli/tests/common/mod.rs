#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use malliavin_core::Coordinate;
use serde_json::Value;

/// Nodes and weights of the `n`-point Gauss-Laguerre rule for `int_0^inf e^{-x} f(x) dx`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n {
        if i == 0 {
            z = 3.0 / (1.0 + 2.4 * nf);
        } else if i == 1 {
            z += 15.0 / (1.0 + 2.5 * nf);
        } else {
            let ai = (i - 1) as f64;
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2]);
        }
        let (mut p1, mut p2, mut pp);
        let mut iter = 0;
        loop {
            p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0 - z) * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            iter += 1;
            if (z - z1).abs() <= 3e-15 * z.abs().max(1.0) || iter > 100 {
                break;
            }
        }
        x[i] = z;
        w[i] = -1.0 / (pp * nf * p2);
    }
    (x, w)
}

/// Values (-1, 0.5, 2) with probabilities (0.3, 0.5, 0.2).
pub fn skewed() -> Coordinate {
    Coordinate::real("y", &[-1.0, 0.5, 2.0], &[0.3, 0.5, 0.2]).unwrap()
}

/// Centered, unit-variance three-point law with nonzero third moment.
pub fn skewed_standard() -> Coordinate {
    let p = [0.4, 0.4, 0.2];
    let vals = [-1.0, 0.0, 2.0];
    let mean: f64 = p.iter().zip(&vals).map(|(p, v)| p * v).sum();
    let var: f64 = p
        .iter()
        .zip(&vals)
        .map(|(p, v)| p * (v - mean).powi(2))
        .sum();
    let scaled: Vec<f64> = vals.iter().map(|v| (v - mean) / var.sqrt()).collect();
    Coordinate::real("z", &scaled, &p).unwrap()
}

/// Runs the CLI with `args`, writing to `out`.
pub fn run_cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_malliavin"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn cli")
}

/// JSON report with the timestamp removed.
pub fn canonical_report(path: &Path) -> String {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    serde_json::to_string(&v).unwrap()
}
