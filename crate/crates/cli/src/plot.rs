//! Long-form CSVs for charting centroid curves and one household's
//! membership bars.

use profile_fcm::fcm::ClusterModel;
use profile_fcm::formats::format_value;

/// `(cluster_id, hour, value)` for every centroid entry.
pub fn centroid_curves(model: &ClusterModel) -> Vec<(usize, usize, f64)> {
    model
        .centroids
        .iter_rows()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(h, &v)| (i, h, v)))
        .collect()
}

pub fn render_centroid_curves(model: &ClusterModel) -> Vec<u8> {
    let mut out = String::from("cluster_id,hour,value\n");
    for (i, h, v) in centroid_curves(model) {
        out.push_str(&format!("{i},{h},{}\n", format_value(v)));
    }
    out.into_bytes()
}

/// Every cluster's bar, including those below the display threshold.
pub fn render_membership_bars(row: &[f64]) -> Vec<u8> {
    let mut out = String::from("cluster_id,membership\n");
    for (i, &v) in row.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", format_value(v)));
    }
    out.into_bytes()
}

/// Number of clusters a household belongs to at or above `threshold`.
pub fn clusters_at_or_above(row: &[f64], threshold: f64) -> usize {
    row.iter().filter(|&&v| v >= threshold).count()
}
