//! Brute-force reference implementations used to check the optimized code.

use std::collections::HashMap;

use debunk_core::data::{Label, SentenceUnit};

fn bag(text: &str) -> HashMap<String, f64> {
    let mut tf = HashMap::new();
    for t in text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        *tf.entry(t.to_string()).or_insert(0.0) += 1.0;
    }
    tf
}

/// Dense TF-IDF cosine over every sentence, sorted by score then
/// (doc_id, sent_index), top `k` of the nonzero scores.
pub fn brute_force_top_k(sentences: &[SentenceUnit], query: &str, k: usize) -> Vec<(String, usize, f64)> {
    let n = sentences.len() as f64;
    let bags: Vec<_> = sentences.iter().map(|s| bag(&s.text)).collect();
    let mut df: HashMap<&str, f64> = HashMap::new();
    for b in &bags {
        for t in b.keys() {
            *df.entry(t.as_str()).or_insert(0.0) += 1.0;
        }
    }
    let idf = |t: &str| df.get(t).map(|d| ((1.0 + n) / (1.0 + d)).ln() + 1.0);
    let weigh = |b: &HashMap<String, f64>| -> HashMap<String, f64> {
        b.iter()
            .filter_map(|(t, tf)| idf(t).map(|w| (t.clone(), tf * w)))
            .collect()
    };
    let norm = |v: &HashMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    let q = weigh(&bag(query));
    let qn = norm(&q);

    let mut scored: Vec<(String, usize, f64)> = Vec::new();
    if qn == 0.0 {
        return scored;
    }
    for (s, b) in sentences.iter().zip(&bags) {
        let v = weigh(b);
        let dot: f64 = q.iter().map(|(t, w)| w * v.get(t).unwrap_or(&0.0)).sum();
        if dot > 0.0 {
            scored.push((s.doc_id.clone(), s.sent_index, dot / (qn * norm(&v))));
        }
    }
    scored.sort_by(|a, b| {
        if (a.2 - b.2).abs() < 1e-12 {
            (&a.0, a.1).cmp(&(&b.0, b.1))
        } else {
            b.2.total_cmp(&a.2)
        }
    });
    scored.truncate(k);
    scored
}

/// Recount of (accuracy, macro F1, F1 of False) from raw pairs.
pub fn recount_metrics(pairs: &[(Label, Label)]) -> (f64, f64, f64) {
    let count = |p: Label, g: Label| pairs.iter().filter(|x| **x == (p, g)).count() as f64;
    let tp = count(Label::False, Label::False);
    let tn = count(Label::True, Label::True);
    let fp = count(Label::False, Label::True);
    let fn_ = count(Label::True, Label::False);
    let f1 = |tp: f64, fp: f64, fn_: f64| {
        if 2.0 * tp + fp + fn_ == 0.0 {
            0.0
        } else {
            2.0 * tp / (2.0 * tp + fp + fn_)
        }
    };
    let f_false = f1(tp, fp, fn_);
    let f_true = f1(tn, fn_, fp);
    ((tp + tn) / pairs.len() as f64, (f_false + f_true) / 2.0, f_false)
}
