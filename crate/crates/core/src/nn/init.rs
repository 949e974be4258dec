use ndarray::Array2;
use rand::Rng;

/// Xavier/Glorot uniform initialisation on `±sqrt(6 / (f_in + f_out))`.
///
/// Draws row-major, one value per entry, so a seeded generator gives a
/// reproducible matrix.
pub fn xavier_init<R: Rng>(f_in: usize, f_out: usize, rng: &mut R) -> Array2<f64> {
    assert!(f_in > 0 && f_out > 0, "xavier_init needs positive dimensions");
    let bound = (6.0 / (f_in + f_out) as f64).sqrt();
    Array2::from_shape_simple_fn((f_in, f_out), || rng.gen_range(-bound..=bound))
}
