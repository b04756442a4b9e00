use mottlab::*;
fn main() {
    for &(h, ceil, rad) in &[(2.0, 10.0, 45.0), (2.0, 10.0, 20.0), (5.0, 10.0, 45.0)] {
        let nb = 900;
        let grid: Vec<f64> = (0..=nb).map(|i| rad * i as f64 / nb as f64).collect();
        let at = |hh: f64| {
            let g = ChamberGeometry::cylinder(rad, 0.0, ceil, [0.0, 0.0, hh]).unwrap();
            model_cdf(&g, &grid).unwrap()
        };
        let d = 1e-3;
        let (a, b, c) = (at(h - d), at(h), at(h + d));
        let mut info = 0.0;
        for i in 0..nb {
            let p = b[i + 1] - b[i];
            let dp = ((c[i + 1] - c[i]) - (a[i + 1] - a[i])) / (2.0 * d);
            if p > 0.0 {
                info += dp * dp / p;
            }
        }
        let sd = 1.0 / (info * 2e4).sqrt();
        println!(
            "h {h} R {rad}: fisher/sample {info:.4e}, CR sd at n=2e4: {sd:.4} mm ({:.2}%)",
            100.0 * sd / h
        );
    }
}
