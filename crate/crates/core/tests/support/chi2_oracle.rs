//! χ² by direct summation with p-values from closed forms of the χ²
//! survival function: a finite Poisson sum for even degrees of freedom and
//! erfc plus a finite sum for odd ones.

use statrs::function::erf::erfc;

pub fn statistic(table: &[Vec<u64>]) -> f64 {
    let n: u64 = table.iter().flatten().sum();
    let mut s = 0.0;
    for i in 0..table.len() {
        for j in 0..table[0].len() {
            let row: u64 = table[i].iter().sum();
            let col: u64 = table.iter().map(|r| r[j]).sum();
            let e = (row * col) as f64 / n as f64;
            s += (table[i][j] as f64 - e).powi(2) / e;
        }
    }
    s
}

pub fn survival(x: f64, dof: usize) -> f64 {
    let h = x / 2.0;
    if dof % 2 == 0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..dof / 2 {
            term *= h / i as f64;
            sum += term;
        }
        (-h).exp() * sum
    } else {
        let mut sum = 0.0;
        // h^(i - 1/2) / Γ(i + 1/2), starting at i = 1 with sqrt(h) / (sqrt(pi) / 2)
        let mut term = h.sqrt() / (std::f64::consts::PI.sqrt() / 2.0);
        for i in 1..=(dof - 1) / 2 {
            sum += term;
            term *= h / (i as f64 + 0.5);
        }
        erfc(h.sqrt()) + (-h).exp() * sum
    }
}
