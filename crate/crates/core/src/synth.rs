//! Seeded synthetic review corpus.
//!
//! The generator produces review and metadata JSON Lines shaped like a
//! public product-review dump: three products above the default review-count
//! cut (≈1700/1400/1150 reviews), a tail of small products, one product with
//! no price, one priced with a string, one whose metadata is missing and one
//! duplicated metadata line. Review text is drawn from the built-in lexicon
//! so lexicon scores correlate with star ratings.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::ingest::EnrichedReview;
use crate::scoring::DEFAULT_LEXICON;

pub const DEFAULT_SEED: u64 = 42;

/// 2015-01-01T00:00:00Z and 2023-01-01T00:00:00Z in epoch milliseconds.
const START_MS: i64 = 1_420_070_400_000;
const END_MS: i64 = 1_672_531_200_000;

const FILLER: &[&str] = &[
    "the", "product", "it", "arrived", "box", "item", "use", "color", "size", "with", "and",
    "this", "was", "for", "my", "after", "days", "daily", "skin", "bottle", "smell", "price",
];

struct Product {
    asin: &'static str,
    reviews: usize,
    /// Probability that a review is 4 or 5 stars.
    quality: f64,
    /// Metadata price value as written to the file.
    price: Value,
    has_meta: bool,
}

fn catalogue() -> Vec<Product> {
    let p = |asin, reviews, quality, price: Value, has_meta| Product {
        asin,
        reviews,
        quality,
        price,
        has_meta,
    };
    vec![
        p("B0SYN00001", 1700, 0.78, json!(24.99), true),
        p("B0SYN00002", 1400, 0.66, json!(59.0), true),
        p("B0SYN00003", 1150, 0.84, json!(12.5), true),
        p("B0SYN00004", 300, 0.70, Value::Null, true),
        p("B0SYN00005", 150, 0.60, json!("$8.99"), true),
        p("B0SYN00006", 100, 0.75, json!(15.0), true),
        p("B0SYN00007", 80, 0.50, json!(7.25), true),
        p("B0SYN00008", 50, 0.90, json!(33.0), true),
        p("B0SYN00009", 30, 0.72, json!(19.99), false),
        p("B0SYN00010", 20, 0.40, json!(5.49), true),
        p("B0SYN00011", 10, 0.80, json!(44.0), true),
        p("B0SYN00012", 5, 0.65, json!(9.99), true),
        p("B0SYN00013", 5, 0.55, json!(29.5), true),
    ]
}

/// Review and metadata files as JSON Lines text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub reviews: String,
    pub metadata: String,
}

fn words(rng: &mut ChaCha8Rng, positive_prob: f64, n_sentiment: usize, n_filler: usize) -> String {
    let pos: Vec<&str> = DEFAULT_LEXICON
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(t, _)| *t)
        .collect();
    let neg: Vec<&str> = DEFAULT_LEXICON
        .iter()
        .filter(|(t, w)| *w < 0.0 && *t != "not")
        .map(|(t, _)| *t)
        .collect();
    let mut out: Vec<&str> = Vec::with_capacity(n_sentiment + n_filler);
    for _ in 0..n_sentiment {
        let pool = if rng.random_bool(positive_prob) {
            &pos
        } else {
            &neg
        };
        out.push(pool.choose(rng).copied().unwrap_or("fine"));
    }
    for _ in 0..n_filler {
        out.push(FILLER.choose(rng).copied().unwrap_or("the"));
    }
    out.shuffle(rng);
    out.join(" ")
}

fn rating(rng: &mut ChaCha8Rng, quality: f64) -> u8 {
    if rng.random_bool(quality) {
        if rng.random_bool(0.7) {
            5
        } else {
            4
        }
    } else {
        *[1u8, 1, 2, 3].choose(rng).unwrap_or(&1)
    }
}

/// Builds the corpus for `seed`; identical seeds give identical bytes.
pub fn generate(seed: u64) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let products = catalogue();
    let mut reviews: Vec<Value> = Vec::new();
    for prod in &products {
        for _ in 0..prod.reviews {
            let ts = rng.random_range(START_MS..END_MS);
            // later reviews drift slightly positive
            let drift = 0.04 * ((ts - START_MS) as f64 / (END_MS - START_MS) as f64 - 0.5);
            let stars = rating(&mut rng, (prod.quality + drift).clamp(0.0, 1.0));
            let positive_prob = [0.08, 0.2, 0.45, 0.85, 0.95][usize::from(stars - 1)];
            let n_sent = rng.random_range(1..=3);
            let n_fill = rng.random_range(3..=18);
            let text = words(&mut rng, positive_prob, n_sent, n_fill);
            let n_title = rng.random_range(0..=2);
            let title = words(&mut rng, positive_prob, 1, n_title);
            let images: Vec<Value> = if rng.random_bool(0.1) {
                vec![json!({
                    "small_image_url": format!("https://img.example/{}/{}.jpg", prod.asin, rng.random::<u32>()),
                })]
            } else {
                Vec::new()
            };
            let helpful: u64 = if rng.random_bool(0.7) {
                0
            } else {
                rng.random_range(1..=40)
            };
            reviews.push(json!({
                "rating": f64::from(stars),
                "title": title,
                "text": text,
                "images": images,
                "asin": prod.asin,
                "parent_asin": prod.asin,
                "user_id": format!("U{:016X}", rng.random::<u64>()),
                "timestamp": ts,
                "helpful_vote": helpful,
                "verified_purchase": rng.random_bool(0.85),
            }));
        }
    }
    reviews.shuffle(&mut rng);

    let mut meta: Vec<Value> = Vec::new();
    for (i, prod) in products.iter().enumerate().filter(|(_, p)| p.has_meta) {
        meta.push(json!({
            "main_category": "All Beauty",
            "title": format!("Synthetic product {}", i + 1),
            "average_rating": ((prod.quality * 2.5 + 2.4) * 10.0).round() / 10.0,
            "rating_number": prod.reviews as u64 * 3,
            "features": [],
            "description": [],
            "price": prod.price,
            "images": [],
            "videos": [],
            "store": format!("Store {}", (b'A' + i as u8 % 4) as char),
            "categories": [],
            "details": {"Item Form": "Cream"},
            "parent_asin": prod.asin,
            "bought_together": null,
        }));
    }
    // a later duplicate line; the first occurrence must win the join
    meta.push(json!({
        "main_category": "All Beauty",
        "title": "Duplicate listing",
        "average_rating": 1.0,
        "rating_number": 1,
        "price": 999.0,
        "store": "Duplicate",
        "parent_asin": products[0].asin,
    }));

    let to_lines = |rows: &[Value]| {
        rows.iter().fold(String::new(), |mut s, v| {
            s.push_str(&v.to_string());
            s.push('\n');
            s
        })
    };
    SynthCorpus {
        reviews: to_lines(&reviews),
        metadata: to_lines(&meta),
    }
}

/// An enriched row with `text` and neutral placeholder values elsewhere.
pub fn blank_review(text: &str) -> EnrichedReview {
    EnrichedReview {
        rating: 5.0,
        title: String::new(),
        text: text.to_owned(),
        images: Vec::new(),
        parent_asin: "B000000000".into(),
        user_id: String::new(),
        timestamp: 0,
        verified_purchase: false,
        helpful_vote: 0,
        main_category: String::new(),
        item_title: String::new(),
        average_rating: None,
        rating_number: 0,
        price: None,
        store: String::new(),
        item_extra: Default::default(),
        review_length: text.chars().count() as u64,
        has_images: 0,
        verified_purchase_flag: 0,
        year: 1970,
        month: 1,
        day: 1,
        weekday: 3,
        sentiment_score: None,
    }
}
