use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::signal::Domain;

/// Per class, Euclidean distance between the imagined and spoken centroids
/// of the flattened (window-major) embeddings.
pub fn per_class_distances(embeddings: &[EmbeddingMatrix]) -> Result<BTreeMap<u32, f64>> {
    let dim = embeddings.first().map(|m| m.values.len()).ok_or_else(|| Error::Coverage("no embeddings".into()))?;
    let mut sums: BTreeMap<(u32, Domain), (Vec<f64>, usize)> = BTreeMap::new();
    for m in embeddings {
        if m.values.len() != dim {
            return Err(Error::Shape(format!("embedding of length {} among length {dim}", m.values.len())));
        }
        let entry = sums.entry((m.label, m.domain)).or_insert_with(|| (vec![0.0; dim], 0));
        entry.0.iter_mut().zip(&m.values).for_each(|(s, v)| *s += v);
        entry.1 += 1;
    }
    let classes: Vec<u32> = {
        let mut c: Vec<u32> = sums.keys().map(|k| k.0).collect();
        c.dedup();
        c
    };
    if classes.len() < 2 {
        return Err(Error::Coverage(format!("need at least 2 classes, found {}", classes.len())));
    }
    let mut out = BTreeMap::new();
    for class in classes {
        let (Some(a), Some(b)) = (sums.get(&(class, Domain::Imagined)), sums.get(&(class, Domain::Spoken))) else {
            return Err(Error::Coverage(format!("class {class} is missing a domain")));
        };
        let dist = a
            .0
            .iter()
            .zip(&b.0)
            .map(|(x, y)| {
                let diff = x / a.1 as f64 - y / b.1 as f64;
                diff * diff
            })
            .sum::<f64>()
            .sqrt();
        out.insert(class, dist);
    }
    Ok(out)
}

/// Mean over classes of the imagined/spoken centroid distance.
pub fn adaptation_distance(embeddings: &[EmbeddingMatrix]) -> Result<f64> {
    let per_class = per_class_distances(embeddings)?;
    Ok(per_class.values().sum::<f64>() / per_class.len() as f64)
}
