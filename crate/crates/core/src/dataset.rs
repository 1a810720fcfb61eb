use std::fmt::Display;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::Graph;

/// Ordered `key=value` record of how a dataset was produced.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    /// Appends `key=value`, replacing an earlier value for the same key.
    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

/// A graph with node features and optional node labels.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphDataset {
    pub name: String,
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: Option<Vec<usize>>,
    pub provenance: Provenance,
}

impl GraphDataset {
    pub fn new(
        name: impl Into<String>,
        graph: Graph,
        features: FeatureMatrix,
        labels: Option<Vec<usize>>,
        provenance: Provenance,
    ) -> Result<Self> {
        if features.rows() != graph.num_nodes() {
            return Err(Error::Shape(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                graph.num_nodes()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != graph.num_nodes() {
                return Err(Error::Shape(format!(
                    "{} labels for {} nodes",
                    labels.len(),
                    graph.num_nodes()
                )));
            }
            let c = labels.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; c];
            for &l in labels {
                seen[l] = true;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::param(format!(
                    "class ids must be 0..{c} without gaps; class {missing} has no nodes"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            graph,
            features,
            labels,
            provenance,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        let name = std::mem::take(&mut self.name);
        Self::new(name, self.graph, self.features, Some(labels), self.provenance)
    }
}

/// Restricts features to their first `n` columns. The name gains a `-n`
/// suffix; graph and labels are shared unchanged.
pub fn slice_features(ds: &GraphDataset, n: usize) -> Result<GraphDataset> {
    let cols = ds.features.cols();
    if n == 0 || n > cols {
        return Err(Error::param(format!("slice width {n} outside 1..={cols}")));
    }
    let mut provenance = ds.provenance.clone();
    provenance.push("feature_slice", n);
    Ok(GraphDataset {
        name: format!("{}-{n}", ds.name),
        graph: ds.graph.clone(),
        features: ds.features.column_prefix(n),
        labels: ds.labels.clone(),
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(cols: usize) -> GraphDataset {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let data = (0..3 * cols).map(|i| i as f64).collect();
        GraphDataset::new("toy", g, FeatureMatrix::new(3, cols, data).unwrap(), Some(vec![0, 1, 0]), Provenance::default())
            .unwrap()
    }

    #[test]
    fn slicing_full_width_keeps_data() {
        let ds = toy(5);
        let s = slice_features(&ds, 5).unwrap();
        assert_eq!(s.features, ds.features);
        assert_eq!(s.graph, ds.graph);
        assert_eq!(s.name, "toy-5");
    }

    #[test]
    fn slicing_is_a_prefix() {
        let ds = toy(6);
        let a = slice_features(&ds, 2).unwrap();
        let b = slice_features(&ds, 4).unwrap();
        assert_eq!(b.features.column_prefix(2), a.features);
    }

    #[test]
    fn slicing_out_of_range() {
        let ds = toy(3);
        assert!(slice_features(&ds, 0).is_err());
        assert!(slice_features(&ds, 4).is_err());
    }

    #[test]
    fn label_validation() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let f = FeatureMatrix::zeros(2, 1);
        assert!(GraphDataset::new("x", g.clone(), f.clone(), Some(vec![0, 2]), Provenance::default()).is_err());
        assert!(GraphDataset::new("x", g.clone(), f.clone(), Some(vec![0]), Provenance::default()).is_err());
        assert!(GraphDataset::new("x", g, FeatureMatrix::zeros(3, 1), None, Provenance::default()).is_err());
    }

    #[test]
    fn provenance_overwrites() {
        let mut p = Provenance::default();
        p.push("a", 1);
        p.push("b", 2);
        p.push("a", 3);
        assert_eq!(p.get("a"), Some("3"));
        assert_eq!(p.entries().len(), 2);
    }
}
