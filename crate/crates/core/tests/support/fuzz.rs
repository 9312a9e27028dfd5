//! Random chat responses for parser robustness checks.

use litscape_core::manifold::rng::LayoutRng;

pub const PIECES: &[&str] = &[
    "Title:", "Description:", "AI:", "LCA stage:", "LCIA method:", "None", "none.", "\n", "\n\n", "\r\n", " ", "  ",
    "```", "```text\n", "- ", "* ", "1. ", "2) ", "**", ":", "::", "Sure! Here you go:", "Answer:", "é", "λ", "🙂",
    "\u{0}", "\t", "key: value", "Other", "ReCiPe", "neural network",
];

pub fn random_response(rng: &mut LayoutRng) -> String {
    let mut s = String::new();
    for _ in 0..rng.index(40) {
        match rng.index(4) {
            0 => {
                let bytes: Vec<u8> = (0..rng.index(12)).map(|_| rng.next_u64() as u8).collect();
                s.push_str(&String::from_utf8_lossy(&bytes));
            }
            _ => s.push_str(PIECES[rng.index(PIECES.len())]),
        }
    }
    s
}

pub fn conformant(rng: &mut LayoutRng, keys: &[&str]) -> (String, Vec<String>) {
    let values: Vec<String> = keys.iter().enumerate().map(|(i, k)| format!("{} value {i} {}", k.to_lowercase(), rng.index(1000))).collect();
    let mut s = String::new();
    if rng.index(2) == 0 {
        s.push_str("Sure! Here you go:\n\n");
    }
    for (k, v) in keys.iter().zip(&values) {
        s.push_str(&format!("{k}: {v}\n"));
    }
    if rng.index(2) == 0 {
        s.push_str("\nLet me know if you need anything else.");
    }
    (s, values)
}
