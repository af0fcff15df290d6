//! Personalised time-of-use tariffs blended from per-cluster offers.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::fcm::FuzzyPartition;
use crate::formats::{check_header, csv_reader, csv_writer, format_value, hour_columns, parse_finite};
use crate::HOURS;

/// Allowed deviation of a membership row sum from 1 before blending.
pub const MEMBERSHIP_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TariffError {
    #[error("offer set does not cover cluster {0}")]
    MissingOffer(usize),
    #[error("more than one offer for cluster {0}")]
    DuplicateOffer(usize),
    #[error("offer set is empty")]
    NoOffers,
    #[error("offer for cluster {cluster_id} has invalid price {price} at hour {hour}")]
    InvalidPrice { cluster_id: usize, hour: usize, price: f64 },
    #[error("membership row has {found} entries, offer set has {expected} clusters")]
    WrongClusterCount { expected: usize, found: usize },
    #[error("membership row is not row-stochastic: {0}")]
    NotRowStochastic(String),
    #[error("negative or non-finite usage {value} at hour {hour}")]
    InvalidUsage { hour: usize, value: f64 },
    #[error("cluster {cluster} out of range for {clusters} clusters")]
    ClusterOutOfRange { cluster: usize, clusters: usize },
    #[error("membership threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("{source_name} line {line}: {message}")]
    Malformed {
        source_name: &'static str,
        line: u64,
        message: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A 24-hour price vector offered to one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct TariffOffer {
    pub cluster_id: usize,
    pub label: String,
    /// Currency units per kWh for each hour.
    pub prices: [f64; HOURS],
}

/// Exactly one offer per cluster `0..c`, ordered by cluster id.
#[derive(Debug, Clone, PartialEq)]
pub struct OfferSet {
    offers: Vec<TariffOffer>,
}

impl OfferSet {
    pub fn new(offers: Vec<TariffOffer>) -> Result<Self, TariffError> {
        if offers.is_empty() {
            return Err(TariffError::NoOffers);
        }
        let mut by_cluster = BTreeMap::new();
        for offer in offers {
            if let Some((hour, &price)) = offer
                .prices
                .iter()
                .enumerate()
                .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
            {
                return Err(TariffError::InvalidPrice {
                    cluster_id: offer.cluster_id,
                    hour,
                    price,
                });
            }
            let id = offer.cluster_id;
            if by_cluster.insert(id, offer).is_some() {
                return Err(TariffError::DuplicateOffer(id));
            }
        }
        let c = by_cluster.len();
        if let Some(missing) = (0..c).find(|i| !by_cluster.contains_key(i)) {
            return Err(TariffError::MissingOffer(missing));
        }
        Ok(Self {
            offers: by_cluster.into_values().collect(),
        })
    }

    pub fn clusters(&self) -> usize {
        self.offers.len()
    }

    pub fn offer(&self, cluster_id: usize) -> Option<&TariffOffer> {
        self.offers.get(cluster_id)
    }

    pub fn offers(&self) -> &[TariffOffer] {
        &self.offers
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonalTariff {
    pub household_id: String,
    pub prices: [f64; HOURS],
    /// The renormalized membership row the prices were blended with.
    pub provenance: Vec<f64>,
}

/// Blends the offers with a household's membership row:
/// `prices[h] = Σ_i u_i · offer_i[h]`.
///
/// The row must sum to 1 within [`MEMBERSHIP_SUM_TOLERANCE`]; it is divided
/// by its sum before blending.
pub fn blend_tariff(offers: &OfferSet, household_id: &str, membership: &[f64]) -> Result<PersonalTariff, TariffError> {
    if membership.len() != offers.clusters() {
        return Err(TariffError::WrongClusterCount {
            expected: offers.clusters(),
            found: membership.len(),
        });
    }
    if let Some(v) = membership.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(TariffError::NotRowStochastic(format!("entry {v}")));
    }
    let sum: f64 = membership.iter().sum();
    if (sum - 1.0).abs() > MEMBERSHIP_SUM_TOLERANCE {
        return Err(TariffError::NotRowStochastic(format!("entries sum to {sum}")));
    }
    let weights: Vec<f64> = membership.iter().map(|v| v / sum).collect();
    let mut prices = [0.0; HOURS];
    for (w, offer) in weights.iter().zip(&offers.offers) {
        for (p, o) in prices.iter_mut().zip(&offer.prices) {
            *p += w * o;
        }
    }
    Ok(PersonalTariff {
        household_id: household_id.to_string(),
        prices,
        provenance: weights,
    })
}

/// Cost of a day's usage: `Σ_h usage[h] · prices[h]`.
pub fn estimate_bill(usage: &[f64; HOURS], tariff: &PersonalTariff) -> Result<f64, TariffError> {
    if let Some((hour, &value)) = usage.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(TariffError::InvalidUsage { hour, value });
    }
    Ok(usage.iter().zip(&tariff.prices).map(|(u, p)| u * p).sum())
}

/// Households whose membership of `cluster` is at least `min_membership`,
/// strongest first; equal memberships are ordered by household id.
pub fn rank_households(
    u: &FuzzyPartition,
    household_ids: &[String],
    cluster: usize,
    min_membership: f64,
) -> Result<Vec<(String, f64)>, TariffError> {
    if cluster >= u.clusters() {
        return Err(TariffError::ClusterOutOfRange {
            cluster,
            clusters: u.clusters(),
        });
    }
    if !(0.0..=1.0).contains(&min_membership) {
        return Err(TariffError::InvalidThreshold(min_membership));
    }
    if household_ids.len() != u.points() {
        return Err(TariffError::WrongClusterCount {
            expected: u.points(),
            found: household_ids.len(),
        });
    }
    let mut ranked: Vec<(String, f64)> = household_ids
        .iter()
        .enumerate()
        .map(|(k, id)| (id.clone(), u.get(k, cluster)))
        .filter(|(_, v)| *v >= min_membership)
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

fn offers_header() -> Vec<String> {
    let mut cols = vec!["cluster_id".to_string(), "label".to_string()];
    cols.extend(hour_columns("p"));
    cols
}

/// Reads `cluster_id,label,p00..p23`.
pub fn read_offers<R: Read>(reader: R) -> Result<OfferSet, TariffError> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    let expected = offers_header();
    check_header(&header, &expected).map_err(|message| TariffError::Malformed {
        source_name: "offers",
        line: 1,
        message,
    })?;
    let mut offers = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| TariffError::Malformed {
            source_name: "offers",
            line,
            message,
        };
        if record.len() != expected.len() {
            return Err(fail(format!("expected {} columns, found {}", expected.len(), record.len())));
        }
        let cluster_id = record[0]
            .parse()
            .map_err(|_| fail(format!("invalid cluster_id {:?}", &record[0])))?;
        let mut prices = [0.0; HOURS];
        for (h, p) in prices.iter_mut().enumerate() {
            *p = parse_finite(&record[2 + h], &expected[2 + h]).map_err(fail)?;
        }
        offers.push(TariffOffer {
            cluster_id,
            label: record[1].to_string(),
            prices,
        });
    }
    OfferSet::new(offers)
}

pub fn write_offers<W: Write>(writer: W, offers: &OfferSet) -> Result<(), TariffError> {
    let mut w = csv_writer(writer);
    w.write_record(offers_header())?;
    for o in offers.offers() {
        let mut row = vec![o.cluster_id.to_string(), o.label.clone()];
        row.extend(o.prices.iter().map(|&p| format_value(p)));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `household_id,p00..p23`.
pub fn write_tariffs<W: Write>(writer: W, tariffs: &[PersonalTariff]) -> Result<(), TariffError> {
    let mut w = csv_writer(writer);
    let mut header = vec!["household_id".to_string()];
    header.extend(hour_columns("p"));
    w.write_record(&header)?;
    for t in tariffs {
        let mut row = vec![t.household_id.clone()];
        row.extend(t.prices.iter().map(|&p| format_value(p)));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `household_id,amount`.
pub fn write_bills<W: Write>(writer: W, bills: &[(String, f64)]) -> Result<(), TariffError> {
    let mut w = csv_writer(writer);
    w.write_record(["household_id", "amount"])?;
    for (id, amount) in bills {
        w.write_record([id.as_str(), &format_value(*amount)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a usage CSV `household_id,h00..h23` of kWh per hour.
pub fn read_usage<R: Read>(reader: R) -> Result<Vec<(String, [f64; HOURS])>, TariffError> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    let mut expected = vec!["household_id".to_string()];
    expected.extend(hour_columns("h"));
    check_header(&header, &expected).map_err(|message| TariffError::Malformed {
        source_name: "usage",
        line: 1,
        message,
    })?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| TariffError::Malformed {
            source_name: "usage",
            line,
            message,
        };
        if record.len() != expected.len() {
            return Err(fail(format!("expected {} columns, found {}", expected.len(), record.len())));
        }
        let mut usage = [0.0; HOURS];
        for (h, u) in usage.iter_mut().enumerate() {
            *u = parse_finite(&record[1 + h], &expected[1 + h]).map_err(fail)?;
        }
        out.push((record[0].to_string(), usage));
    }
    Ok(out)
}

/// Writes `household_id,membership` rows from [`rank_households`].
pub fn write_ranking<W: Write>(writer: W, ranking: &[(String, f64)]) -> Result<(), TariffError> {
    let mut w = csv_writer(writer);
    w.write_record(["household_id", "membership"])?;
    for (id, v) in ranking {
        w.write_record([id.as_str(), &format_value(*v)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
