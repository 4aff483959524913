//! Independent price verification: model prices against consensus and
//! broker bid/offer, with the recalibration trigger.

use std::collections::HashMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{CurveError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub label: String,
    pub quote_date: NaiveDate,
    pub ref_swap: Option<f64>,
    pub bid: Option<f64>,
    pub offer: Option<f64>,
    pub consensus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuoteSet {
    quotes: Vec<Quote>,
}

impl QuoteSet {
    pub fn new(quotes: Vec<Quote>) -> Result<Self> {
        for q in &quotes {
            if let (Some(b), Some(o)) = (q.bid, q.offer) {
                if b > o {
                    return Err(CurveError::InvalidSpec(format!("{}: bid {b} above offer {o}", q.label)));
                }
            }
        }
        Ok(QuoteSet { quotes })
    }

    pub fn quotes(&self) -> &[Quote] {
        &self.quotes
    }
}

/// Where the model price sits relative to the broker market.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketPosition {
    BelowBid,
    Inside,
    AboveOffer,
    NoMarket,
}

impl fmt::Display for MarketPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarketPosition::BelowBid => "below_bid",
            MarketPosition::Inside => "inside",
            MarketPosition::AboveOffer => "above_offer",
            MarketPosition::NoMarket => "no_market",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Ok,
    Recalibrate,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Ok => "OK",
            Flag::Recalibrate => "RECALIBRATE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub model: f64,
    pub consensus: Option<f64>,
    /// `100 (model - consensus) / consensus`.
    pub diff_pct: Option<f64>,
    pub position: MarketPosition,
    pub flag: Flag,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    /// Labels present on one side only.
    pub unmatched: Vec<String>,
}

/// The model is too aggressive when it is above both consensus and offer, or
/// below both consensus and bid. A missing reference never triggers.
fn flag_for(model: f64, q: &Quote) -> Flag {
    let above = matches!((q.consensus, q.offer), (Some(c), Some(o)) if model > c && model > o);
    let below = matches!((q.consensus, q.bid), (Some(c), Some(b)) if model < c && model < b);
    if above || below {
        Flag::Recalibrate
    } else {
        Flag::Ok
    }
}

fn position_for(model: f64, q: &Quote) -> MarketPosition {
    match (q.bid, q.offer) {
        (None, None) => MarketPosition::NoMarket,
        (Some(b), _) if model < b => MarketPosition::BelowBid,
        (_, Some(o)) if model > o => MarketPosition::AboveOffer,
        _ => MarketPosition::Inside,
    }
}

/// Matches model prices to quotes by label, in quote order.
pub fn compare_quotes(model_prices: &[(String, f64)], quotes: &QuoteSet) -> ComparisonReport {
    let by_label: HashMap<&str, f64> = model_prices.iter().map(|(l, p)| (l.as_str(), *p)).collect();
    let quoted: HashMap<&str, ()> = quotes.quotes.iter().map(|q| (q.label.as_str(), ())).collect();
    let mut report = ComparisonReport::default();
    for q in &quotes.quotes {
        match by_label.get(q.label.as_str()) {
            Some(&model) => report.rows.push(ComparisonRow {
                label: q.label.clone(),
                model,
                consensus: q.consensus,
                diff_pct: q.consensus.map(|c| 100.0 * (model - c) / c),
                position: position_for(model, q),
                flag: flag_for(model, q),
            }),
            None => report.unmatched.push(q.label.clone()),
        }
    }
    for (label, _) in model_prices {
        if !quoted.contains_key(label.as_str()) {
            report.unmatched.push(label.clone());
        }
    }
    report
}
