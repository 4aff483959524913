//! Data bundles on disk and the file formats they use.
//!
//! Layout under the bundle root, one file per asset:
//! `curves/<asset>.csv`, `vols/<asset>.csv`, `schedule/<asset>.csv`,
//! `history/<asset>.csv`, `quotes/<asset>.csv`, `instruments/<asset>.csv`,
//! `model/<asset>.json`, plus `fx/<pair>.json` and `cross/<name>.json`.

pub mod documents;
pub mod pathfile;
pub mod tabular;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::error::{CurveError, Result};
use crate::factor_model::CrossCorrelation;
use crate::pricing::{FxSpec, QuoteSet};
use crate::termstructure::{ContractSchedule, ForwardCurve};

pub use documents::{
    load_model, load_model_document, save_model, save_model_document, CalibrationRecord, CrossDocument, FxDocument,
    ModelDocument, MODEL_DOCUMENT_VERSION,
};
pub use pathfile::{decode_paths, encode_paths, read_paths, write_paths, write_paths_csv, PATH_FILE_VERSION};
pub use tabular::{
    read_curve, read_history, read_instruments, read_quotes, read_schedule, read_vols, CsvTable, HistoryPanel,
    InstrumentRow, StrikeSpec, VolData,
};

/// Everything known about one asset.
#[derive(Debug, Clone, Default)]
pub struct AssetData {
    pub curve: Option<ForwardCurve>,
    pub vols: Option<VolData>,
    pub schedule: Option<ContractSchedule>,
    pub history: Option<HistoryPanel>,
    pub quotes: Option<QuoteSet>,
    pub instruments: Option<Vec<InstrumentRow>>,
    pub model: Option<ModelDocument>,
}

/// A validated, immutable set of market data.
#[derive(Debug, Clone)]
pub struct DataBundle {
    pub root: PathBuf,
    pub assets: BTreeMap<String, AssetData>,
    /// FX documents keyed by file stem.
    pub fx: BTreeMap<String, FxDocument>,
    pub cross: Vec<CrossDocument>,
    /// Non-fatal findings, such as mixed `as_of` dates.
    pub warnings: Vec<String>,
}

const TABLE_DIRS: [&str; 6] = ["curves", "vols", "schedule", "history", "quotes", "instruments"];

impl DataBundle {
    pub fn asset(&self, name: &str) -> Result<&AssetData> {
        self.assets.get(name).ok_or_else(|| CurveError::MissingFile {
            path: self.root.join("curves").join(format!("{name}.csv")),
            expectation: format!(
                "asset `{name}` is not in the bundle (available: {})",
                self.assets.keys().cloned().collect::<Vec<_>>().join(", ")
            ),
        })
    }

    pub fn path_of(&self, dir: &str, asset: &str, ext: &str) -> PathBuf {
        self.root.join(dir).join(format!("{asset}.{ext}"))
    }

    fn missing(&self, dir: &str, asset: &str, ext: &str, what: &str) -> CurveError {
        CurveError::MissingFile {
            path: self.path_of(dir, asset, ext),
            expectation: what.to_string(),
        }
    }

    pub fn curve(&self, asset: &str) -> Result<&ForwardCurve> {
        self.asset(asset)?
            .curve
            .as_ref()
            .ok_or_else(|| self.missing("curves", asset, "csv", "forward curve `expiry_date,price`"))
    }

    pub fn vols(&self, asset: &str) -> Result<&VolData> {
        self.asset(asset)?.vols.as_ref().ok_or_else(|| {
            self.missing("vols", asset, "csv", "vol strip `label,option_expiry,futures_expiry,atm_vol`")
        })
    }

    pub fn history(&self, asset: &str) -> Result<&HistoryPanel> {
        self.asset(asset)?
            .history
            .as_ref()
            .ok_or_else(|| self.missing("history", asset, "csv", "history `date,nearby_1,…,nearby_K`"))
    }

    pub fn quotes(&self, asset: &str) -> Result<&QuoteSet> {
        self.asset(asset)?.quotes.as_ref().ok_or_else(|| {
            self.missing("quotes", asset, "csv", "quotes `label,quote_date,ref_swap,bid,offer,consensus`")
        })
    }

    pub fn instruments(&self, asset: &str) -> Result<&[InstrumentRow]> {
        self.asset(asset)?.instruments.as_deref().ok_or_else(|| {
            self.missing("instruments", asset, "csv", "instruments `label,kind,call_put,strike,expiry,contracts`")
        })
    }

    pub fn model(&self, asset: &str) -> Result<&ModelDocument> {
        self.asset(asset)?
            .model
            .as_ref()
            .ok_or_else(|| self.missing("model", asset, "json", "model document with a factor spec"))
    }

    /// The FX document whose `asset` field names this asset.
    pub fn fx_for(&self, asset: &str) -> Result<&FxSpec> {
        self.fx
            .values()
            .find(|d| d.asset == asset)
            .map(|d| &d.fx)
            .ok_or_else(|| self.missing("fx", asset, "json", "FX document naming this asset"))
    }

    pub fn cross_pairs(&self) -> Vec<(String, String, CrossCorrelation)> {
        self.cross
            .iter()
            .map(|c| (c.first.clone(), c.second.clone(), c.correlation.clone()))
            .collect()
    }
}

fn files_in(dir: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CurveError::io(dir, e))? {
        let path = entry.map_err(|e| CurveError::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn csv_as_of(path: &Path) -> Result<Option<NaiveDate>> {
    Ok(CsvTable::read(path)?.as_of)
}

fn load_asset(root: &Path, name: &str) -> Result<(AssetData, Vec<Option<NaiveDate>>)> {
    let file = |dir: &str, ext: &str| {
        let p = root.join(dir).join(format!("{name}.{ext}"));
        p.is_file().then_some(p)
    };
    let mut data = AssetData::default();
    let mut dates = Vec::new();
    if let Some(p) = file("curves", "csv") {
        let c = read_curve(&p)?;
        dates.push(Some(c.valuation_date));
        data.curve = Some(c);
    }
    if let Some(p) = file("vols", "csv") {
        data.vols = Some(read_vols(&p)?);
        dates.push(csv_as_of(&p)?);
    }
    if let Some(p) = file("schedule", "csv") {
        data.schedule = Some(read_schedule(&p)?);
        dates.push(csv_as_of(&p)?);
    }
    if let Some(p) = file("history", "csv") {
        data.history = Some(read_history(&p)?);
    }
    if let Some(p) = file("quotes", "csv") {
        data.quotes = Some(read_quotes(&p)?);
    }
    if let Some(p) = file("instruments", "csv") {
        data.instruments = Some(read_instruments(&p)?);
    }
    if let Some(p) = file("model", "json") {
        let doc = load_model_document(&p)?;
        if doc.calibration.is_some() {
            doc.model()?;
        }
        dates.push(doc.as_of);
        data.model = Some(doc);
    }
    if let (Some(v), Some(s)) = (&data.vols, &data.schedule) {
        for q in v.strip.quotes() {
            if let Some(e) = s.get(&q.label) {
                if e.option_expiry != q.option_expiry || e.futures_expiry != q.futures_expiry {
                    return Err(CurveError::InvalidSpec(format!(
                        "{name}: contract {} has different expiries in vols and schedule",
                        q.label
                    )));
                }
            }
        }
    }
    Ok((data, dates))
}

/// Loads and validates every file under `root`.
pub fn load_bundle(root: &Path) -> Result<DataBundle> {
    let mut names = BTreeSet::new();
    for dir in TABLE_DIRS {
        names.extend(files_in(&root.join(dir), "csv")?.into_iter().map(|(n, _)| n));
    }
    names.extend(files_in(&root.join("model"), "json")?.into_iter().map(|(n, _)| n));
    if names.is_empty() {
        return Err(CurveError::MissingFile {
            path: root.to_path_buf(),
            expectation: "a bundle needs at least curves/<asset>.csv; optional vols/, schedule/, history/, \
                          quotes/, instruments/ (<asset>.csv), model/<asset>.json, fx/<pair>.json, cross/<name>.json"
                .into(),
        });
    }
    let names: Vec<String> = names.into_iter().collect();
    let loaded: Vec<(AssetData, Vec<Option<NaiveDate>>)> =
        names.par_iter().map(|n| load_asset(root, n)).collect::<Result<_>>()?;
    let mut all_dates = Vec::new();
    let mut assets = BTreeMap::new();
    for (name, (data, dates)) in names.iter().zip(loaded) {
        let needs_curve = data.vols.is_some() || data.model.is_some() || data.instruments.is_some();
        if needs_curve && data.curve.is_none() {
            return Err(CurveError::MissingFile {
                path: root.join("curves").join(format!("{name}.csv")),
                expectation: format!("asset {name} has vols, model or instruments but no forward curve"),
            });
        }
        all_dates.extend(dates);
        assets.insert(name.clone(), data);
    }
    let mut fx = BTreeMap::new();
    for (stem, p) in files_in(&root.join("fx"), "json")? {
        let doc: FxDocument = documents::read_json(&p)?;
        let a = assets.get(&doc.asset).ok_or_else(|| CurveError::MissingFile {
            path: root.join("curves").join(format!("{}.csv", doc.asset)),
            expectation: format!("{} refers to asset {}", p.display(), doc.asset),
        })?;
        if let Some(m) = &a.model {
            doc.fx.clone().for_spec(&m.spec)?;
        }
        all_dates.push(doc.as_of);
        fx.insert(stem, doc);
    }
    let mut cross = Vec::new();
    for (_, p) in files_in(&root.join("cross"), "json")? {
        let doc: CrossDocument = documents::read_json(&p)?;
        for a in [&doc.first, &doc.second] {
            if !assets.contains_key(a) {
                return Err(CurveError::MissingFile {
                    path: root.join("model").join(format!("{a}.json")),
                    expectation: format!("{} refers to asset {a}", p.display()),
                });
            }
        }
        all_dates.push(doc.as_of);
        cross.push(doc);
    }
    let seen = tabular::as_of_dates(all_dates.iter());
    let mut warnings = Vec::new();
    if seen.len() > 1 {
        let mut d: Vec<String> = seen.keys().map(|d| d.to_string()).collect();
        d.sort();
        warnings.push(format!("bundle mixes as_of dates: {}", d.join(", ")));
    }
    Ok(DataBundle {
        root: root.to_path_buf(),
        assets,
        fx,
        cross,
        warnings,
    })
}
