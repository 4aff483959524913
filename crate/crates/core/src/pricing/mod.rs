//! Semi-analytic pricers built on the model's log covariances.

pub mod black;
pub mod moments;
pub mod quanto;
pub mod quotes;
pub mod smile;

pub use black::{black_price, black_price_from_variance, norm_cdf, norm_inv, CallPut};
pub use moments::{
    asian_price, average_log_variance, price, swaption_price, vanilla_price, OptionKind, OptionSpec,
    PriceResult, SampleEntry, SamplingSchedule,
};
pub use quanto::{quanto_average_log_variance, quanto_price, FxSpec};
pub use quotes::{compare_quotes, ComparisonReport, ComparisonRow, Flag, MarketPosition, Quote, QuoteSet};
pub use smile::{quick_delta, smile_adjusted_price, strike_from_quick_delta, MonotoneCubic, SmileAdjusted};
