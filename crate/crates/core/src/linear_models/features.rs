use serde::Serialize;

use super::ModelKind;

/// Structural description of a linear model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModelFeatures {
    pub model: &'static str,
    pub topology: &'static str,
    pub voltage: &'static str,
    pub angle: &'static str,
    pub reactive: &'static str,
    pub loss: &'static str,
}

impl ModelKind {
    /// Label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::LinDistFlow => "LinDistFlow",
            ModelKind::Dc => "Classic DC PF",
            ModelKind::DcEnhanced => "Enhanced DC PF",
            ModelKind::LinAc => "Linearized AC PF",
        }
    }

    /// Derived from the construction of each builder: which quantities get
    /// columns, in which coordinates, and how losses enter.
    pub fn features(self) -> ModelFeatures {
        let (topology, voltage, angle, reactive, loss) = match self {
            ModelKind::LinDistFlow => ("radial", "squared", "-", "standard", "-"),
            ModelKind::Dc => ("meshed", "standard", "-", "-", "-"),
            ModelKind::DcEnhanced => ("meshed", "squared", "standard", "standard", "linearized"),
            ModelKind::LinAc => ("meshed", "standard", "standard", "standard", "linearized"),
        };
        ModelFeatures {
            model: self.label(),
            topology,
            voltage,
            angle,
            reactive,
            loss,
        }
    }
}

pub fn feature_table() -> Vec<ModelFeatures> {
    ModelKind::ALL.iter().map(|k| k.features()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_models::{build_model, BasePoint, ModelOptions};
    use crate::network::Network;

    #[test]
    fn rows_match_reference_table() {
        let rows: Vec<[&str; 6]> = feature_table()
            .iter()
            .map(|f| [f.model, f.topology, f.voltage, f.angle, f.reactive, f.loss])
            .collect();
        assert_eq!(
            rows,
            vec![
                ["LinDistFlow", "radial", "squared", "-", "standard", "-"],
                ["Classic DC PF", "meshed", "standard", "-", "-", "-"],
                ["Enhanced DC PF", "meshed", "squared", "standard", "standard", "linearized"],
                ["Linearized AC PF", "meshed", "standard", "standard", "standard", "linearized"],
            ]
        );
    }

    /// Cross-checks the static table against the columns the builders emit.
    #[test]
    fn features_match_built_columns() {
        let net = Network::ieee33();
        let inj = net.injections(1.0, 0.0);
        let base = BasePoint::solve(&net, &inj, "nominal").unwrap();
        for kind in ModelKind::ALL {
            let m = build_model(kind, &net, Some(&base), &inj, ModelOptions::default()).unwrap();
            let f = kind.features();
            let squared = m.column("u[1]").is_some();
            assert_eq!(f.voltage == "squared", squared, "{kind}");
            assert_eq!(f.reactive == "standard", m.column("q[1]").is_some(), "{kind}");
            assert_eq!(f.loss == "linearized", !m.branch_p_loss.is_empty(), "{kind}");
        }
    }
}
