use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

/// One user review as published in the review corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub rating: f64,
    #[serde(default, deserialize_with = "null_as_default")]
    pub title: String,
    #[serde(default, deserialize_with = "null_as_default")]
    pub text: String,
    #[serde(default, deserialize_with = "null_as_default")]
    pub images: Vec<Value>,
    pub parent_asin: String,
    #[serde(default, deserialize_with = "null_as_default")]
    pub user_id: String,
    pub timestamp: i64,
    #[serde(default, deserialize_with = "null_as_default")]
    pub verified_purchase: bool,
    #[serde(default, deserialize_with = "null_as_default")]
    pub helpful_vote: u64,
}

/// Product metadata keyed by `parent_asin`.
///
/// Fields the analyses never read (features, description, images, videos,
/// categories, details, bought_together, ...) are kept verbatim in `extra`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub parent_asin: String,
    #[serde(default, deserialize_with = "null_as_default")]
    pub main_category: String,
    #[serde(default, deserialize_with = "null_as_default")]
    pub title: String,
    #[serde(default)]
    pub average_rating: Option<f64>,
    #[serde(default, deserialize_with = "null_as_default")]
    pub rating_number: u64,
    #[serde(default, deserialize_with = "lenient_price")]
    pub price: Option<f64>,
    #[serde(default, deserialize_with = "null_as_default")]
    pub store: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// A joined review with engineered features and an optional sentiment score.
///
/// Review fields keep their corpus names. The metadata title is renamed
/// `item_title` and the metadata pass-through fields are nested under
/// `item_extra` so they cannot shadow review fields of the same name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedReview {
    pub rating: f64,
    pub title: String,
    pub text: String,
    pub images: Vec<Value>,
    pub parent_asin: String,
    pub user_id: String,
    pub timestamp: i64,
    pub verified_purchase: bool,
    pub helpful_vote: u64,

    pub main_category: String,
    pub item_title: String,
    pub average_rating: Option<f64>,
    pub rating_number: u64,
    pub price: Option<f64>,
    pub store: String,
    #[serde(default)]
    pub item_extra: Map<String, Value>,

    pub review_length: u64,
    pub has_images: u8,
    pub verified_purchase_flag: u8,
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub weekday: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_score: Option<f64>,
}

fn null_as_default<'de, D, T>(de: D) -> Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: Default + Deserialize<'de>,
{
    Ok(Option::<T>::deserialize(de)?.unwrap_or_default())
}

/// Prices arrive as numbers, null, or strings such as "$12.50" or "None".
fn lenient_price<'de, D>(de: D) -> Result<Option<f64>, D::Error>
where
    D: Deserializer<'de>,
{
    let v = Option::<Value>::deserialize(de)?;
    Ok(match v {
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => s
            .trim()
            .trim_start_matches('$')
            .replace(',', "")
            .parse()
            .ok(),
        _ => None,
    })
}

impl ReviewRecord {
    pub(crate) fn validate(&self) -> Result<(), String> {
        if !(1.0..=5.0).contains(&self.rating) {
            return Err(format!("rating {} outside [1, 5]", self.rating));
        }
        if self.timestamp < 0 {
            return Err(format!("negative timestamp {}", self.timestamp));
        }
        if self.parent_asin.is_empty() {
            return Err("empty parent_asin".into());
        }
        Ok(())
    }
}

impl ItemMeta {
    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.parent_asin.is_empty() {
            return Err("empty parent_asin".into());
        }
        if let Some(p) = self.price {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(format!("invalid price {p}"));
            }
        }
        Ok(())
    }
}
