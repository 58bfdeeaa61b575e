//! Reference architectures used throughout examples and benchmarks.

/// Tabular survival classifier: six ReLU layers, two output classes.
pub const TITANIC_HIDDEN: [usize; 6] = [25, 50, 100, 100, 100, 100];
pub const TITANIC_CLASSES: usize = 2;

/// 28x28 grayscale image classifier, ten classes.
pub const FASHION_HIDDEN: [usize; 6] = [1024, 1024, 512, 512, 256, 256];
pub const FASHION_INPUT: usize = 784;
pub const FASHION_CLASSES: usize = 10;

/// Mid-sized tabular classifier.
pub const OPENML_HIDDEN: [usize; 5] = [64, 128, 128, 256, 256];

/// Resolve a preset name to its hidden-layer widths.
pub fn hidden_widths(name: &str) -> Option<&'static [usize]> {
    match name {
        "titanic" => Some(&TITANIC_HIDDEN),
        "fashion" => Some(&FASHION_HIDDEN),
        "openml" => Some(&OPENML_HIDDEN),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Network;

    #[test]
    fn preset_sizes_match_reference_totals() {
        let fashion =
            Network::<f64>::zeroed(FASHION_INPUT, &FASHION_HIDDEN, FASHION_CLASSES).unwrap();
        assert_eq!(fashion.count_parameters().total_params, 2_840_586);

        // 31 engineered features -> 37,702 parameters.
        let titanic = Network::<f64>::zeroed(31, &TITANIC_HIDDEN, TITANIC_CLASSES).unwrap();
        assert_eq!(titanic.count_parameters().total_params, 37_702);
    }

    #[test]
    fn lookup_is_by_exact_name() {
        assert_eq!(hidden_widths("titanic"), Some(&TITANIC_HIDDEN[..]));
        assert_eq!(hidden_widths("fashion"), Some(&FASHION_HIDDEN[..]));
        assert_eq!(hidden_widths("openml"), Some(&OPENML_HIDDEN[..]));
        assert_eq!(hidden_widths("Titanic"), None);
    }
}
