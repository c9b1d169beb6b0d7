//! Turns raw text into normalized sentences: numbers are found, parsed
//! (numerals, cardinal words, magnitudes, ordinals) and replaced by the
//! mask token with their values kept alongside.
//!
//! cargo run --example normalize_text

use numpred::numtext::{
    decompose, extract_numbers, normalize_document, to_scientific_string, FilterConfig,
};

const DOC: &str = "Revenue rose to $32 million in 2016 as planned. The company shipped sixty \
thousand trucks to dealers across the region last spring. Too short with 5 words. \
Analysts expect the third quarter to bring 2 trillion yen in combined orders for the group.";

fn main() -> numpred::Result<()> {
    for n in extract_numbers(DOC) {
        println!("{:>22}  {:<14} {}", format!("{:?}", n.surface), n.value, to_scientific_string(n.value)?);
    }
    println!();
    for s in normalize_document(DOC, &FilterConfig::default()) {
        println!("{}", s.tokens.join(" "));
        for &(i, v) in &s.numbers {
            let em = decompose(v)?;
            println!("    token {i:>2}: {v}  (e = {}, m = {})", em.exponent, em.mantissa);
        }
    }
    Ok(())
}
