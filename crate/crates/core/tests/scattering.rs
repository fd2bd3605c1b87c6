use prolate_enkf::harness::{make_phantom, synth_data, PhantomSpec};
use prolate_enkf::numerics::{bessel_j, hankel1};
use prolate_enkf::scattering::{full_far_field, DirectionSet, GridSpec};
use prolate_enkf::Complex;

/// Separation-of-variables far field of a homogeneous disk with real
/// contrast, in the convention `k^2 int exp(-i k x.y) q u dy`.
fn disk_far_field(k: f64, radius: f64, q: f64, angle: f64) -> Complex {
    let k1 = k * (1.0 + q).sqrt();
    let j = |n: i64, x: f64| {
        let v = bessel_j(n.unsigned_abs() as usize, x);
        if n < 0 && n % 2 != 0 { -v } else { v }
    };
    let h = |n: i64, x: f64| {
        let v = hankel1(n.unsigned_abs() as usize, x).unwrap();
        if n < 0 && n % 2 != 0 { -v } else { v }
    };
    let (a, b) = (k * radius, k1 * radius);
    let mut sum = Complex::new(0.0, 0.0);
    for n in -30i64..=30 {
        let dj1 = 0.5 * (j(n - 1, b) - j(n + 1, b));
        let dj = 0.5 * (j(n - 1, a) - j(n + 1, a));
        let dh = 0.5 * (h(n - 1, a) - h(n + 1, a));
        let num = k1 * dj1 * j(n, a) - k * j(n, b) * dj;
        let den = k1 * dj1 * h(n, a) - k * j(n, b) * dh;
        sum -= num / den * Complex::from_polar(1.0, n as f64 * angle);
    }
    Complex::new(0.0, -4.0) * sum
}

#[test]
fn disk_matches_series_solution() {
    let (k, radius, q) = (3.0, 0.5, 0.3);
    let dirs = DirectionSet::new(16).unwrap();
    let spec = PhantomSpec::disk(radius, Complex::new(q, 0.0));
    let mut errors = Vec::new();
    for n in [48, 96] {
        let field = make_phantom(&spec, &GridSpec::unit(n).unwrap()).unwrap();
        let f = full_far_field(&field, k, &dirs).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..dirs.len() {
            for jj in 0..dirs.len() {
                let exact = disk_far_field(k, radius, q, dirs.angle(i) - dirs.angle(jj));
                num += (f.get(i, jj) - exact).norm_sqr();
                den += exact.norm_sqr();
            }
        }
        errors.push((num / den).sqrt());
    }
    assert!(errors[1] < 0.05, "{errors:?}");
    assert!(errors[1] < errors[0], "{errors:?}");
}

#[test]
fn synthesized_data_is_finite_and_reciprocal() {
    let invert = GridSpec::unit(50).unwrap();
    let synth = GridSpec::unit(64).unwrap();
    let f = synth_data(&PhantomSpec::cross2d(), 10.0, 64, &synth, &invert, false).unwrap();
    assert_eq!(f.len(), 64);
    assert!(f.frobenius_norm().is_finite() && f.frobenius_norm() > 0.0);
    assert!(f.reciprocity_defect().unwrap() < 1e-3);
}

#[test]
fn far_field_file_round_trip() {
    let grid = GridSpec::unit(24).unwrap();
    let field = make_phantom(&PhantomSpec::disk(0.4, Complex::new(0.5, 0.2)), &grid).unwrap();
    let f = full_far_field(&field, 2.0, &DirectionSet::new(8).unwrap()).unwrap();
    let mut buf = Vec::new();
    f.write_to(&mut buf).unwrap();
    let back = prolate_enkf::scattering::FarFieldMatrix::read_from(buf.as_slice()).unwrap();
    assert_eq!(back, f);
}
