//! Seeded synthetic world generation.
//!
//! Builds a catalog, a query set with planted ground truth, and the
//! knowledge base that reformulation draws from. Everything is driven by a
//! single seeded stream, so a seed pins the whole world byte for byte.
//!
//! Queries come from generator classes that each trigger one known failure
//! mode against this catalog (or none, for the simple class). Seven fixed
//! cases covering every failure row ship inside every world regardless of
//! configuration. Vocabulary is partitioned per family so retrieval
//! behavior stays analyzable: a family's tokens never collide with
//! another's, and the inventory-void query's tokens stay at edit distance
//! three or more from the entire vocabulary.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planning::edit_distance_within;
use crate::world::{
    AttributeEntry, Catalog, Complexity, Extremum, GeneratorClass, Intent, Item, KnowledgeBase,
    QueryCase, RewriteEntry,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub n_items: usize,
    pub n_queries: usize,
    pub simple_fraction: f64,
    /// Upper bound on planted target items per query.
    pub targets_per_query: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_items: 3000,
            n_queries: 3000,
            simple_fraction: 0.8,
            targets_per_query: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub catalog: Catalog,
    pub queries: Vec<QueryCase>,
    pub kb: KnowledgeBase,
}

/// The seven fixed query texts present in every generated world.
pub const FIXTURE_QUERIES: [&str; 7] = [
    "iPhone 17 Pro",
    "laptttop wth 32G",
    "brand X water",
    "bottoms match green shirt",
    "camping",
    "high shrimp snack",
    "bird watching camera",
];

const MIN_ITEMS: usize = 400;

/// Tokens the inventory-void fixture depends on staying absent.
const VOID_GUARD: [&str; 2] = ["brand", "water"];

const COLORS: [&str; 10] = [
    "red", "blue", "black", "grey", "silver", "amber", "teal", "ivory", "navy", "olive",
];

const SCENARIO_WORDS: [&str; 30] = [
    "office", "travel", "hiking", "city", "beach", "formal", "gaming", "study", "party", "yoga",
    "fishing", "cycling", "climbing", "skiing", "surfing", "picnic", "garden", "kitchen",
    "commute", "wedding", "festival", "jogging", "karaoke", "diving", "sailing", "painting",
    "baking", "touring", "archery", "rowing",
];

const DESCRIPTOR_FIRST: [&str; 9] = [
    "long", "fast", "ultra", "extra", "super", "heavy", "slim", "mega", "dual",
];
const DESCRIPTOR_SECOND: [&str; 10] = [
    "lasting", "charging", "light", "large", "quiet", "duty", "power", "fit", "range", "zoom",
];

struct AttrSpec {
    name: &'static str,
    direction: Extremum,
    values: [&'static str; 4],
}

const ATTR_SPECS: [AttrSpec; 4] = [
    AttrSpec {
        name: "battery_life",
        direction: Extremum::Max,
        values: ["6h", "12h", "24h", "48h"],
    },
    AttrSpec {
        name: "charge_rate",
        direction: Extremum::Max,
        values: ["18w", "30w", "65w", "120w"],
    },
    AttrSpec {
        name: "weight",
        direction: Extremum::Min,
        values: ["250g", "400g", "800g", "1500g"],
    },
    AttrSpec {
        name: "capacity",
        direction: Extremum::Max,
        values: ["16l", "32l", "64l", "128l"],
    },
];

const ONSETS: [&str; 24] = [
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br",
    "cl", "dr", "fl", "gr", "pl", "tr",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 7] = ["", "n", "r", "s", "t", "x", "l"];

struct Builder {
    rng: ChaCha8Rng,
    cfg: WorldConfig,
    items: Vec<Item>,
    kb: KnowledgeBase,
    used_tokens: BTreeSet<String>,
    next_id: usize,
    scenario_words: Vec<&'static str>,
    descriptor_pairs: Vec<(usize, usize)>,
    simple: Vec<SimpleFamily>,
    dual: Vec<QuerySpec>,
    drift: Vec<QuerySpec>,
    gran: Vec<QuerySpec>,
    attr: Vec<QuerySpec>,
    scen: Vec<QuerySpec>,
    neg: Vec<QuerySpec>,
}

struct SimpleFamily {
    title: String,
    intent: Intent,
    targets: BTreeSet<String>,
    /// Pre-built noisy variants of the family query.
    noisy: Vec<String>,
}

/// One generated complex query with its ground truth.
struct QuerySpec {
    texts: Vec<String>,
    intent: Intent,
    targets: BTreeSet<String>,
}

impl Builder {
    fn new(seed: u64, cfg: WorldConfig) -> Self {
        let mut used = BTreeSet::new();
        for t in ["iphone", "17", "pro", "smartphones", "apple", "laptop", "business", "student",
            "laptops", "32gb", "16gb", "ram", "green", "shirt", "shirts", "bottoms", "khakis",
            "jeans", "match", "camping", "gear", "accessories", "tent", "sleeping", "bag",
            "shrimp", "snack", "snacks", "60", "10", "ratio", "high", "telephoto", "camera", "shelter",
            "cameras", "wide", "angle", "bird", "watching", "brand", "x", "water", "for", "no",
            "without", "non", "none", "contains"]
        {
            used.insert(t.to_string());
        }
        for c in COLORS {
            used.insert(c.to_string());
        }
        for w in SCENARIO_WORDS {
            used.insert(w.to_string());
        }
        for w in DESCRIPTOR_FIRST.iter().chain(DESCRIPTOR_SECOND.iter()) {
            used.insert(w.to_string());
        }
        let mut descriptor_pairs = Vec::new();
        for (i, _) in DESCRIPTOR_FIRST.iter().enumerate() {
            for (j, _) in DESCRIPTOR_SECOND.iter().enumerate() {
                descriptor_pairs.push((i, j));
            }
        }
        Builder {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            items: Vec::new(),
            kb: KnowledgeBase::default(),
            used_tokens: used,
            next_id: 0,
            scenario_words: SCENARIO_WORDS.to_vec(),
            descriptor_pairs,
            simple: Vec::new(),
            dual: Vec::new(),
            drift: Vec::new(),
            gran: Vec::new(),
            attr: Vec::new(),
            scen: Vec::new(),
            neg: Vec::new(),
        }
    }

    fn pseudo_word(&mut self) -> String {
        loop {
            let syllables = 2 + usize::from(self.rng.random::<f64>() < 0.4);
            let mut word = String::new();
            for _ in 0..syllables {
                word.push_str(ONSETS[self.rng.random_range(0..ONSETS.len())]);
                word.push_str(VOWELS[self.rng.random_range(0..VOWELS.len())]);
            }
            word.push_str(CODAS[self.rng.random_range(0..CODAS.len())]);
            if word.len() < 4 || self.used_tokens.contains(&word) {
                continue;
            }
            if VOID_GUARD
                .iter()
                .any(|g| edit_distance_within(&word, g, 2).is_some())
            {
                continue;
            }
            // Plural form enters the vocabulary through category names.
            let plural = format!("{word}s");
            if self.used_tokens.contains(&plural) {
                continue;
            }
            self.used_tokens.insert(word.clone());
            self.used_tokens.insert(plural);
            return word;
        }
    }

    fn model_token(&mut self) -> String {
        loop {
            let letters: String = (0..2)
                .map(|_| (b'a' + self.rng.random_range(0..26u8)) as char)
                .collect();
            let word = format!("{letters}{}", self.rng.random_range(10..100));
            if self.used_tokens.insert(word.clone()) {
                return word;
            }
        }
    }

    fn take_scenario_word(&mut self) -> String {
        if self.scenario_words.is_empty() {
            self.pseudo_word()
        } else {
            let idx = self.rng.random_range(0..self.scenario_words.len());
            self.scenario_words.swap_remove(idx).to_string()
        }
    }

    fn take_descriptor(&mut self) -> String {
        if self.descriptor_pairs.is_empty() {
            return format!("{} {}", self.pseudo_word(), self.pseudo_word());
        }
        let idx = self.rng.random_range(0..self.descriptor_pairs.len());
        let (i, j) = self.descriptor_pairs.swap_remove(idx);
        format!("{} {}", DESCRIPTOR_FIRST[i], DESCRIPTOR_SECOND[j])
    }

    fn id(&mut self) -> String {
        let id = format!("it-{:06}", self.next_id);
        self.next_id += 1;
        id
    }

    fn color(&mut self) -> String {
        COLORS[self.rng.random_range(0..COLORS.len())].to_string()
    }

    fn push_item(
        &mut self,
        title: &str,
        category: &str,
        brand: &str,
        attributes: BTreeMap<String, String>,
        scenarios: BTreeSet<String>,
    ) -> String {
        let id = self.id();
        let quality = 0.55 + 0.4 * self.rng.random::<f64>();
        let price = 10.0 + 110.0 * self.rng.random::<f64>();
        self.items.push(Item {
            id: id.clone(),
            title: title.to_string(),
            category: category.to_string(),
            brand: brand.to_string(),
            attributes,
            scenarios,
            price,
            quality,
        });
        id
    }

    fn register_category(&mut self, name: &str) {
        self.kb.category_vocab.insert(name.to_string());
    }

    fn cap_targets(&self, ids: Vec<String>) -> BTreeSet<String> {
        ids.into_iter().take(self.cfg.targets_per_query).collect()
    }

    /// Mangles a token into an out-of-vocabulary typo and records the
    /// correction.
    fn make_typo(&mut self, word: &str) -> String {
        loop {
            let chars: Vec<char> = word.chars().collect();
            let mut mangled: Vec<char> = chars.clone();
            match self.rng.random_range(0..3u8) {
                0 => {
                    // Duplicate a character.
                    let pos = self.rng.random_range(0..chars.len());
                    mangled.insert(pos, chars[pos]);
                }
                1 => {
                    if chars.len() > 4 {
                        let pos = self.rng.random_range(0..chars.len());
                        mangled.remove(pos);
                    } else {
                        let pos = self.rng.random_range(0..chars.len());
                        mangled.insert(pos, chars[pos]);
                    }
                }
                _ => {
                    if chars.len() >= 2 {
                        let pos = self.rng.random_range(0..chars.len() - 1);
                        mangled.swap(pos, pos + 1);
                    } else {
                        mangled.push(chars[0]);
                    }
                }
            }
            let typo: String = mangled.into_iter().collect();
            if typo == word
                || self.used_tokens.contains(&typo)
                || self.kb.typo_table.contains_key(&typo)
            {
                continue;
            }
            self.used_tokens.insert(typo.clone());
            self.kb.typo_table.insert(typo.clone(), word.to_string());
            return typo;
        }
    }
}

fn fixtures(b: &mut Builder) -> Vec<QueryCase> {
    let mut cases = Vec::new();

    // Effective: one specific product with uniformly high relevance.
    b.register_category("smartphones");
    let storages = ["128GB", "256GB", "512GB", "1TB", "256GB", "512GB"];
    let mut iphone_ids = Vec::new();
    for (i, storage) in storages.iter().enumerate() {
        let id = format!("fx-iph-{i}");
        b.items.push(Item {
            id: id.clone(),
            title: "iPhone 17 Pro".into(),
            category: "smartphones".into(),
            brand: "Apple".into(),
            attributes: BTreeMap::from([
                ("storage".to_string(), storage.to_string()),
                ("line".to_string(), "pro".to_string()),
            ]),
            scenarios: BTreeSet::new(),
            price: 80.0 + 3.0 * i as f64,
            quality: 0.9,
        });
        iphone_ids.push(id);
    }
    cases.push(QueryCase {
        text: "iPhone 17 Pro".into(),
        complexity: Complexity::Simple,
        intent: Intent {
            category: Some("smartphones".into()),
            required_attrs: BTreeMap::from([("line".to_string(), "pro".to_string())]),
            scenario: None,
            negated: vec![],
        },
        targets: iphone_ids.into_iter().collect(),
        class: Some(GeneratorClass::Specific),
    });

    // Query noise: a typo, a filler, and an unmatched unit alias.
    b.register_category("laptops");
    let mut laptop32 = Vec::new();
    for i in 0..10 {
        let (title, ram) = if i < 5 {
            ("business laptop", "32GB RAM")
        } else {
            ("student laptop", "16GB RAM")
        };
        let id = format!("fx-lap-{i}");
        b.items.push(Item {
            id: id.clone(),
            title: title.into(),
            category: "laptops".into(),
            brand: "corebook".into(),
            attributes: BTreeMap::from([("ram".to_string(), ram.to_string())]),
            scenarios: BTreeSet::new(),
            price: 90.0 + 4.0 * i as f64,
            quality: 0.85,
        });
        if i < 5 {
            laptop32.push(id);
        }
    }
    b.kb.typo_table.insert("laptttop".into(), "laptop".into());
    b.kb.filler_lexicon.insert("wth".into());
    b.kb.unit_table.insert("32g".into(), "32GB RAM".into());
    cases.push(QueryCase {
        text: "laptttop wth 32G".into(),
        complexity: Complexity::Complex,
        intent: Intent {
            category: Some("laptops".into()),
            required_attrs: BTreeMap::from([("ram".to_string(), "32GB RAM".to_string())]),
            scenario: None,
            negated: vec![],
        },
        targets: laptop32.into_iter().collect(),
        class: Some(GeneratorClass::Noise),
    });

    // Inventory void: valid-looking tokens with no inventory behind them.
    cases.push(QueryCase {
        text: "brand X water".into(),
        complexity: Complexity::Complex,
        intent: Intent::default(),
        targets: BTreeSet::new(),
        class: Some(GeneratorClass::Void),
    });

    // Entity drift: results dominated by the wrong head entity.
    b.register_category("shirts");
    b.register_category("bottoms");
    for i in 0..40 {
        let id = format!("fx-shirt-{i}");
        b.items.push(Item {
            id,
            title: "green shirt".into(),
            category: "shirts".into(),
            brand: "loomline".into(),
            attributes: BTreeMap::new(),
            scenarios: BTreeSet::new(),
            price: 20.0 + i as f64,
            quality: 0.75,
        });
    }
    let mut bottoms_ids = Vec::new();
    for i in 0..16 {
        let (title, idp) = if i < 8 { ("khakis", "fx-khaki") } else { ("jeans", "fx-jeans") };
        let id = format!("{idp}-{i}");
        b.items.push(Item {
            id: id.clone(),
            title: title.into(),
            category: "bottoms".into(),
            brand: "loomline".into(),
            attributes: BTreeMap::new(),
            scenarios: BTreeSet::from(["bottomswear".to_string()]),
            price: 30.0 + i as f64,
            quality: 0.8,
        });
        bottoms_ids.push(id);
    }
    b.kb.scenario_map.push(RewriteEntry {
        key: "bottoms".into(),
        rewrites: vec!["khakis".into(), "jeans".into()],
        item_tag: Some("bottomswear".into()),
        prior: 1.0,
    });
    cases.push(QueryCase {
        text: "bottoms match green shirt".into(),
        complexity: Complexity::Complex,
        intent: Intent {
            category: Some("bottoms".into()),
            required_attrs: BTreeMap::new(),
            scenario: Some("bottomswear".into()),
            negated: vec![],
        },
        targets: bottoms_ids.into_iter().take(b.cfg.targets_per_query).collect(),
        class: Some(GeneratorClass::Drift),
    });

    // Granularity mismatch: accessories crowd out the core categories.
    // Core items must be unreachable from the raw query, so their category
    // shares no token with it.
    b.register_category("camping accessories");
    b.register_category("shelter gear");
    let acc_nouns = ["lantern", "mug", "stool", "hook", "torch", "mallet", "flask", "tarp",
        "peg", "whistle", "compass", "thermos", "grill"];
    for i in 0..26 {
        let id = format!("fx-camp-acc-{i}");
        b.items.push(Item {
            id,
            title: format!("camping {}", acc_nouns[i % acc_nouns.len()]),
            category: "camping accessories".into(),
            brand: "trailkit".into(),
            attributes: BTreeMap::new(),
            scenarios: BTreeSet::new(),
            price: 15.0 + i as f64,
            quality: 0.7,
        });
    }
    let mut core_ids = Vec::new();
    for i in 0..9 {
        let title = if i < 5 { "tent" } else { "sleeping bag" };
        let id = format!("fx-camp-core-{i}");
        b.items.push(Item {
            id: id.clone(),
            title: title.into(),
            category: "shelter gear".into(),
            brand: "trailkit".into(),
            attributes: BTreeMap::new(),
            scenarios: BTreeSet::from(["sheltergear".to_string()]),
            price: 60.0 + 5.0 * i as f64,
            quality: 0.85,
        });
        core_ids.push(id);
    }
    for marker in ["accessories", "accessory"] {
        b.kb.accessory_markers.insert(marker.into());
    }
    b.kb.scenario_map.push(RewriteEntry {
        key: "camping".into(),
        rewrites: vec!["tent".into(), "sleeping bag".into()],
        item_tag: Some("sheltergear".into()),
        prior: 1.0,
    });
    cases.push(QueryCase {
        text: "camping".into(),
        complexity: Complexity::Complex,
        intent: Intent {
            category: Some("shelter gear".into()),
            required_attrs: BTreeMap::new(),
            scenario: Some("sheltergear".into()),
            negated: vec![],
        },
        targets: core_ids.into_iter().collect(),
        class: Some(GeneratorClass::Granularity),
    });

    // Attribute misalignment: a vague descriptor against concrete ratios.
    b.register_category("snacks");
    let mut snack60 = Vec::new();
    for i in 0..6 {
        let ratio = if i < 3 { "60%" } else { "10%" };
        let id = format!("fx-snack-{i}");
        b.items.push(Item {
            id: id.clone(),
            title: "shrimp snack".into(),
            category: "snacks".into(),
            brand: "crispico".into(),
            attributes: BTreeMap::from([("shrimp_ratio".to_string(), ratio.to_string())]),
            scenarios: BTreeSet::new(),
            price: 12.0 + i as f64,
            quality: 0.8,
        });
        if i < 3 {
            snack60.push(id);
        }
    }
    b.kb.attribute_map.push(AttributeEntry {
        descriptor: "high shrimp".into(),
        attribute: "shrimp_ratio".into(),
        direction: Extremum::Max,
        template: "{value} ratio shrimp snack".into(),
        default_value: "50%".into(),
        prior: 1.0,
    });
    cases.push(QueryCase {
        text: "high shrimp snack".into(),
        complexity: Complexity::Complex,
        intent: Intent {
            category: Some("snacks".into()),
            required_attrs: BTreeMap::from([("shrimp_ratio".to_string(), "60%".to_string())]),
            scenario: None,
            negated: vec![],
        },
        targets: snack60.into_iter().collect(),
        class: Some(GeneratorClass::Attribute),
    });

    // Scenario misalignment: mixed telephoto and wide-angle results.
    b.register_category("cameras");
    let mut tele_ids = Vec::new();
    for i in 0..12 {
        let (title, lens, tagged) = if i < 6 {
            ("telephoto camera", "telephoto", true)
        } else {
            ("wide angle camera", "wide angle", false)
        };
        let id = format!("fx-cam-{i}");
        b.items.push(Item {
            id: id.clone(),
            title: title.into(),
            category: "cameras".into(),
            brand: "optagon".into(),
            attributes: BTreeMap::from([("lens".to_string(), lens.to_string())]),
            scenarios: if tagged {
                BTreeSet::from(["bird_watching".to_string()])
            } else {
                BTreeSet::new()
            },
            price: 100.0 + 6.0 * i as f64,
            quality: 0.82,
        });
        if tagged {
            tele_ids.push(id);
        }
    }
    b.kb.scenario_map.push(RewriteEntry {
        key: "bird watching".into(),
        rewrites: vec!["telephoto camera".into()],
        item_tag: Some("bird_watching".into()),
        prior: 1.0,
    });
    cases.push(QueryCase {
        text: "bird watching camera".into(),
        complexity: Complexity::Complex,
        intent: Intent {
            category: Some("cameras".into()),
            required_attrs: BTreeMap::from([("lens".to_string(), "telephoto".to_string())]),
            scenario: Some("bird_watching".into()),
            negated: vec![],
        },
        targets: tele_ids.into_iter().collect(),
        class: Some(GeneratorClass::Scenario),
    });

    for filler in ["plz", "pls", "thx", "omg", "asap"] {
        b.kb.filler_lexicon.insert(filler.into());
    }
    for marker in ["no", "without", "non"] {
        b.kb.negation_markers.insert(marker.into());
    }

    cases
}

fn build_simple_family(b: &mut Builder) {
    let brand = b.pseudo_word();
    let noun = b.pseudo_word();
    let model = b.model_token();
    let category = format!("{noun}s");
    b.register_category(&category);
    let title = format!("{brand} {noun} {model}");
    let size = 8;
    let mut ids = Vec::new();
    for _ in 0..size {
        let color = b.color();
        let id = b.push_item(
            &title,
            &category,
            &brand,
            BTreeMap::from([("color".to_string(), color)]),
            BTreeSet::new(),
        );
        ids.push(id);
    }
    // Two noisy variants per family, with every content token broken so
    // nothing matches until sanitization repairs it. The typos join the
    // correction table.
    let mut noisy = Vec::new();
    let b_typo = b.make_typo(&brand);
    let n_typo = b.make_typo(&noun);
    noisy.push(format!("{b_typo} {n_typo} plz"));
    let b_typo2 = b.make_typo(&brand);
    let n_typo2 = b.make_typo(&noun);
    noisy.push(format!("{b_typo2} {n_typo2}"));
    let intent = Intent {
        category: Some(category),
        required_attrs: BTreeMap::new(),
        scenario: None,
        negated: vec![],
    };
    let targets = b.cap_targets(ids);
    b.simple.push(SimpleFamily {
        title,
        intent,
        targets,
        noisy,
    });
}

fn build_dual_family(b: &mut Builder) {
    let family_noun = b.pseudo_word();
    let family_cat = format!("{family_noun}s");
    b.register_category(&family_cat);
    let brand = b.pseudo_word();
    for _ in 0..14 {
        let adj = b.pseudo_word();
        b.push_item(
            &format!("{family_noun} {adj}"),
            &family_cat,
            &brand,
            BTreeMap::new(),
            BTreeSet::new(),
        );
    }

    let key_a = b.take_scenario_word();
    let key_b = b.take_scenario_word();
    // Each sub-category is reachable only through its own hook token. A
    // query hooks exactly one side, so the other side is what the results
    // lack; which side that is can only be read off the snapshot, since
    // the scenario words themselves never occur in any title.
    let sub = |b: &mut Builder, key: &str| -> (String, Vec<String>, String, String) {
        let noun = b.pseudo_word();
        let hook = b.pseudo_word();
        let cat = format!("{noun}s");
        b.register_category(&cat);
        let tag = format!("{}use", key.replace(' ', ""));
        let mut ids = Vec::new();
        for _ in 0..8 {
            let adj = b.pseudo_word();
            let id = b.push_item(
                &format!("{noun} {hook} {adj}"),
                &cat,
                "subline",
                BTreeMap::new(),
                BTreeSet::from([tag.clone()]),
            );
            ids.push(id);
        }
        b.kb.scenario_map.push(RewriteEntry {
            key: key.to_string(),
            rewrites: vec![noun.clone()],
            item_tag: Some(tag.clone()),
            prior: 1.0,
        });
        (cat, ids, tag, hook)
    };
    let (cat_a, ids_a, tag_a, hook_a) = sub(b, &key_a);
    let (cat_b, ids_b, tag_b, hook_b) = sub(b, &key_b);

    // One query spec per direction: hooking A leaves B underserved and vice
    // versa. The two forms share every query-side feature.
    let form = |hooked: &str, m_cat: &String, m_ids: &[String], m_tag: &String| QuerySpec {
        texts: vec![
            format!("{key_a} {key_b} {family_noun} {hooked}"),
            format!("{key_b} {key_a} {family_noun} {hooked}"),
        ],
        intent: Intent {
            category: Some(m_cat.clone()),
            required_attrs: BTreeMap::new(),
            scenario: Some(m_tag.clone()),
            negated: vec![],
        },
        targets: m_ids.iter().take(b.cfg.targets_per_query).cloned().collect(),
    };
    let form_a = form(&hook_a, &cat_b, &ids_b, &tag_b);
    let form_b = form(&hook_b, &cat_a, &ids_a, &tag_a);
    b.dual.push(form_a);
    b.dual.push(form_b);
}

fn build_drift_family(b: &mut Builder) {
    let target_cat = b.pseudo_word();
    b.register_category(&target_cat);
    let tag = format!("{target_cat}use");
    let sub_a = b.pseudo_word();
    let sub_b = b.pseudo_word();
    let mut target_ids = Vec::new();
    for i in 0..16 {
        let noun = if i < 8 { &sub_a } else { &sub_b };
        let adj = b.pseudo_word();
        let id = b.push_item(
            &format!("{noun} {adj}"),
            &target_cat,
            "anchorline",
            BTreeMap::new(),
            BTreeSet::from([tag.clone()]),
        );
        target_ids.push(id);
    }
    let dom_adj = b.pseudo_word();
    let dom_noun = b.pseudo_word();
    let dom_cat = format!("{dom_noun}s");
    b.register_category(&dom_cat);
    for _ in 0..30 {
        b.push_item(
            &format!("{dom_adj} {dom_noun}"),
            &dom_cat,
            "anchorline",
            BTreeMap::new(),
            BTreeSet::new(),
        );
    }
    b.kb.scenario_map.push(RewriteEntry {
        key: target_cat.clone(),
        rewrites: vec![sub_a, sub_b],
        item_tag: Some(tag.clone()),
        prior: 1.0,
    });
    let intent = Intent {
        category: Some(target_cat.clone()),
        required_attrs: BTreeMap::new(),
        scenario: Some(tag),
        negated: vec![],
    };
    let targets = b.cap_targets(target_ids);
    b.drift.push(QuerySpec {
        texts: vec![format!("{target_cat} for {dom_adj} {dom_noun}")],
        intent,
        targets,
    });
}

fn build_gran_family(b: &mut Builder) {
    let activity = b.take_scenario_word();
    let acc_cat = format!("{activity} accessories");
    let core_word = b.pseudo_word();
    let core_cat = format!("{core_word} gear");
    b.register_category(&acc_cat);
    b.register_category(&core_cat);
    let acc_nouns: Vec<String> = (0..8).map(|_| b.pseudo_word()).collect();
    for i in 0..26 {
        b.push_item(
            &format!("{activity} {}", acc_nouns[i % acc_nouns.len()]),
            &acc_cat,
            "sideline",
            BTreeMap::new(),
            BTreeSet::new(),
        );
    }
    let tag = format!("{activity}use");
    let core_a = b.pseudo_word();
    let core_b = b.pseudo_word();
    let mut core_ids = Vec::new();
    for i in 0..8 {
        let noun = if i < 4 { &core_a } else { &core_b };
        let adj = b.pseudo_word();
        let id = b.push_item(
            &format!("{noun} {adj}"),
            &core_cat,
            "sideline",
            BTreeMap::new(),
            BTreeSet::from([tag.clone()]),
        );
        core_ids.push(id);
    }
    b.kb.scenario_map.push(RewriteEntry {
        key: activity.clone(),
        rewrites: vec![core_a, core_b],
        item_tag: Some(tag.clone()),
        prior: 1.0,
    });
    let intent = Intent {
        category: Some(core_cat),
        required_attrs: BTreeMap::new(),
        scenario: Some(tag),
        negated: vec![],
    };
    let targets = b.cap_targets(core_ids);
    b.gran.push(QuerySpec {
        texts: vec![activity],
        intent,
        targets,
    });
}

fn build_attr_family(b: &mut Builder, spec_idx: usize) {
    let spec = &ATTR_SPECS[spec_idx % ATTR_SPECS.len()];
    let noun = b.pseudo_word();
    let cat = format!("{noun}s");
    b.register_category(&cat);
    let descriptor = b.take_descriptor();
    // Three value tiers, assigned round-robin so the probe always observes
    // at least two distinct values.
    let lo = spec.values[0];
    let mid = spec.values[1 + (spec_idx % 2)];
    let hi = spec.values[3];
    let tiers = [lo, mid, hi];
    let extremal = match spec.direction {
        Extremum::Max => hi,
        Extremum::Min => lo,
    };
    let mut target_ids = Vec::new();
    for i in 0..12 {
        let value = tiers[i % 3];
        let adj = b.pseudo_word();
        let id = b.push_item(
            &format!("{noun} {adj}"),
            &cat,
            "specline",
            BTreeMap::from([(spec.name.to_string(), value.to_string())]),
            BTreeSet::new(),
        );
        if value == extremal {
            target_ids.push(id);
        }
    }
    b.kb.attribute_map.push(AttributeEntry {
        descriptor: descriptor.clone(),
        attribute: spec.name.to_string(),
        direction: spec.direction,
        template: format!("{{value}} {noun}"),
        default_value: mid.to_string(),
        prior: 1.0,
    });
    let intent = Intent {
        category: Some(cat),
        required_attrs: BTreeMap::from([(spec.name.to_string(), extremal.to_string())]),
        scenario: None,
        negated: vec![],
    };
    let targets = b.cap_targets(target_ids);
    b.attr.push(QuerySpec {
        texts: vec![format!("{descriptor} {noun}")],
        intent,
        targets,
    });
}

fn build_scen_family(b: &mut Builder) {
    let key = b.take_scenario_word();
    let noun = b.pseudo_word();
    let cat = format!("{noun}s");
    b.register_category(&cat);
    let tag = format!("{key}use");
    let sub_good = b.pseudo_word();
    let sub_other = b.pseudo_word();
    let mut good_ids = Vec::new();
    for i in 0..12 {
        let tagged = i < 6;
        let sub = if tagged { &sub_good } else { &sub_other };
        let id = b.push_item(
            &format!("{sub} {noun}"),
            &cat,
            "scenline",
            BTreeMap::from([("kind".to_string(), sub.to_string())]),
            if tagged {
                BTreeSet::from([tag.clone()])
            } else {
                BTreeSet::new()
            },
        );
        if tagged {
            good_ids.push(id);
        }
    }
    b.kb.scenario_map.push(RewriteEntry {
        key: key.clone(),
        rewrites: vec![format!("{sub_good} {noun}")],
        item_tag: Some(tag.clone()),
        prior: 1.0,
    });
    let intent = Intent {
        category: Some(cat),
        required_attrs: BTreeMap::from([("kind".to_string(), sub_good.clone())]),
        scenario: Some(tag),
        negated: vec![],
    };
    let targets = b.cap_targets(good_ids);
    b.scen.push(QuerySpec {
        texts: vec![format!("{key} {noun}")],
        intent,
        targets,
    });
}

fn build_neg_family(b: &mut Builder) {
    let noun = b.pseudo_word();
    let cat = format!("{noun}s");
    b.register_category(&cat);
    let object = b.pseudo_word();
    let mut clean_ids = Vec::new();
    for i in 0..14 {
        let has_object = i < 6;
        let adj = b.pseudo_word();
        let value = if has_object { object.clone() } else { "none".to_string() };
        let id = b.push_item(
            &format!("{noun} {adj}"),
            &cat,
            "pureline",
            BTreeMap::from([("contains".to_string(), value)]),
            BTreeSet::new(),
        );
        if !has_object {
            clean_ids.push(id);
        }
    }
    let intent = Intent {
        category: Some(cat),
        required_attrs: BTreeMap::from([("contains".to_string(), "none".to_string())]),
        scenario: None,
        negated: vec![object.clone()],
    };
    let targets = b.cap_targets(clean_ids);
    b.neg.push(QuerySpec {
        texts: vec![format!("{noun} without {object}")],
        intent,
        targets,
    });
}

fn build_filler_items(b: &mut Builder, count: usize) {
    let mut remaining = count;
    while remaining > 0 {
        let noun = b.pseudo_word();
        let cat = format!("{noun}s");
        b.register_category(&cat);
        let size = remaining.min(8);
        for _ in 0..size {
            let adj = b.pseudo_word();
            let color = b.color();
            b.push_item(
                &format!("{noun} {adj}"),
                &cat,
                "fillline",
                BTreeMap::from([("color".to_string(), color)]),
                BTreeSet::new(),
            );
        }
        remaining -= size;
    }
}

/// Rejects any void-query token that lands near the catalog vocabulary.
fn void_query(b: &mut Builder, vocab: &BTreeSet<String>) -> String {
    'outer: loop {
        let n = 2 + usize::from(b.rng.random::<f64>() < 0.5);
        let mut words = Vec::new();
        for _ in 0..n {
            // Draw fresh pseudo words; they are already absent from the
            // vocabulary, but must also be far from every indexed token.
            let w = b.pseudo_word();
            words.push(w);
        }
        for w in &words {
            let near = vocab
                .iter()
                .any(|v| edit_distance_within(w, v, 2).is_some());
            if near {
                continue 'outer;
            }
        }
        return words.join(" ");
    }
}

pub fn generate_world(seed: u64, cfg: &WorldConfig) -> Result<World> {
    if cfg.n_items == 0 || cfg.n_queries == 0 {
        return Err(Error::InvalidConfig("sizes must be >= 1".into()));
    }
    if cfg.targets_per_query > cfg.n_items {
        return Err(Error::InvalidConfig(format!(
            "targets_per_query {} exceeds catalog size {}",
            cfg.targets_per_query, cfg.n_items
        )));
    }
    if cfg.n_items < MIN_ITEMS {
        return Err(Error::InvalidConfig(format!(
            "n_items {} below the {MIN_ITEMS} needed for the mandatory fixtures",
            cfg.n_items
        )));
    }
    let n_simple = (cfg.n_queries as f64 * cfg.simple_fraction).round() as usize;
    let n_complex = cfg.n_queries - n_simple;
    if n_simple < 1 || n_complex < 6 {
        return Err(Error::InvalidConfig(
            "query mix leaves no room for the fixture cases".into(),
        ));
    }

    let mut b = Builder::new(seed, cfg.clone());
    let fixture_cases = fixtures(&mut b);
    let fixture_items = b.items.len();
    let budget = cfg.n_items - fixture_items;

    let simple_count = ((budget * 30 / 100) / 8).max(4);
    let dual_count = ((budget * 25 / 100) / 30).max(2);
    let drift_count = ((budget * 12 / 100) / 46).max(1);
    let gran_count = ((budget * 8 / 100) / 34).max(1);
    let attr_count = ((budget * 8 / 100) / 12).max(2);
    let scen_count = ((budget * 6 / 100) / 12).max(1);
    let neg_count = ((budget * 3 / 100) / 14).max(1);
    let family_items = simple_count * 8
        + dual_count * 30
        + drift_count * 46
        + gran_count * 34
        + attr_count * 12
        + scen_count * 12
        + neg_count * 14;
    if family_items > budget {
        return Err(Error::InvalidConfig(format!(
            "n_items {} too small for the generator family mix",
            cfg.n_items
        )));
    }

    for _ in 0..simple_count {
        build_simple_family(&mut b);
    }
    for _ in 0..dual_count {
        build_dual_family(&mut b);
    }
    for _ in 0..drift_count {
        build_drift_family(&mut b);
    }
    for _ in 0..gran_count {
        build_gran_family(&mut b);
    }
    for i in 0..attr_count {
        build_attr_family(&mut b, i);
    }
    for _ in 0..scen_count {
        build_scen_family(&mut b);
    }
    for _ in 0..neg_count {
        build_neg_family(&mut b);
    }
    build_filler_items(&mut b, budget - family_items);
    debug_assert_eq!(b.items.len(), cfg.n_items);

    // Queries: fixtures first, then draws from the class mixes.
    let vocab: BTreeSet<String> = b
        .items
        .iter()
        .flat_map(crate::retrieval::indexed_tokens)
        .collect();
    let mut queries = fixture_cases;

    for _ in 0..n_simple - 1 {
        let fam = b.rng.random_range(0..b.simple.len());
        let fam = &b.simple[fam];
        queries.push(QueryCase {
            text: fam.title.clone(),
            complexity: Complexity::Simple,
            intent: fam.intent.clone(),
            targets: fam.targets.clone(),
            class: Some(GeneratorClass::Specific),
        });
    }

    // Class mix for generated complex queries (noise, void, drift,
    // granularity, attribute, scenario, dual-scenario, negation).
    let weights = [0.20, 0.10, 0.15, 0.09, 0.10, 0.08, 0.25, 0.03];
    for _ in 0..n_complex - 6 {
        let draw: f64 = b.rng.random();
        let mut acc = 0.0;
        let mut class = 7usize;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if draw < acc {
                class = i;
                break;
            }
        }
        let case = match class {
            0 => {
                let fam_idx = b.rng.random_range(0..b.simple.len());
                let variant = b.rng.random_range(0..b.simple[fam_idx].noisy.len());
                let fam = &b.simple[fam_idx];
                QueryCase {
                    text: fam.noisy[variant].clone(),
                    complexity: Complexity::Complex,
                    intent: fam.intent.clone(),
                    targets: fam.targets.clone(),
                    class: Some(GeneratorClass::Noise),
                }
            }
            1 => {
                let text = void_query(&mut b, &vocab);
                QueryCase {
                    text,
                    complexity: Complexity::Complex,
                    intent: Intent::default(),
                    targets: BTreeSet::new(),
                    class: Some(GeneratorClass::Void),
                }
            }
            i @ (2 | 3 | 4 | 5 | 7) => {
                let (pool, class) = match i {
                    2 => (&b.drift, GeneratorClass::Drift),
                    3 => (&b.gran, GeneratorClass::Granularity),
                    4 => (&b.attr, GeneratorClass::Attribute),
                    5 => (&b.scen, GeneratorClass::Scenario),
                    _ => (&b.neg, GeneratorClass::Negation),
                };
                let fam_idx = b.rng.random_range(0..pool.len());
                let variant = b.rng.random_range(0..pool[fam_idx].texts.len());
                let fam = &pool[fam_idx];
                QueryCase {
                    text: fam.texts[variant].clone(),
                    complexity: Complexity::Complex,
                    intent: fam.intent.clone(),
                    targets: fam.targets.clone(),
                    class: Some(class),
                }
            }
            _ => {
                let fam_idx = b.rng.random_range(0..b.dual.len());
                let variant = b.rng.random_range(0..b.dual[fam_idx].texts.len());
                let fam = &b.dual[fam_idx];
                QueryCase {
                    text: fam.texts[variant].clone(),
                    complexity: Complexity::Complex,
                    intent: fam.intent.clone(),
                    targets: fam.targets.clone(),
                    class: Some(GeneratorClass::DualScenario),
                }
            }
        };
        queries.push(case);
    }

    // Interleave generated traffic so any contiguous split keeps the mix;
    // the fixture cases stay at the head.
    let tail = queries.split_off(FIXTURE_QUERIES.len());
    let mut tail: Vec<QueryCase> = tail;
    for i in (1..tail.len()).rev() {
        let j = b.rng.random_range(0..=i);
        tail.swap(i, j);
    }
    queries.extend(tail);

    let catalog = Catalog::from_items(b.items)?;
    Ok(World {
        catalog,
        queries,
        kb: b.kb,
    })
}
