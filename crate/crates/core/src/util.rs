/// Floor that forgives float noise just below an integer, so a budget like
/// 0.29 * 100 (= 28.999999999999996 in f64) floors to 29, not 28.
pub(crate) fn tolerant_floor(x: f64) -> u64 {
    debug_assert!(x >= 0.0 && x.is_finite());
    (x + 1e-9).floor() as u64
}

#[cfg(test)]
mod tests {
    use super::tolerant_floor;

    #[test]
    fn forgives_representation_noise() {
        assert_eq!(tolerant_floor(0.29 * 100.0), 29);
        assert_eq!(tolerant_floor(0.2 * 500.0), 100);
        assert_eq!(tolerant_floor(2.9999), 2);
        assert_eq!(tolerant_floor(3.0), 3);
        assert_eq!(tolerant_floor(0.0), 0);
    }
}
