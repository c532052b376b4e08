//! BLEU and ROUGE-L under the crate's tokenizer.
//!
//! cargo run --example token_baselines

use scorepoint::metrics::{bleu, rouge_l, tokenize};

fn main() {
    let reference = "The museum is free on Fridays, and tours start hourly.";
    println!("tokens: {:?}\n", tokenize(reference));
    for candidate in
        [reference, "Tours start hourly; the museum is free on Fridays.", "The museum charges an entry fee.", ""]
    {
        println!(
            "{:<55} BLEU {:.4}  ROUGE-L {:.4}",
            format!("{candidate:?}"),
            bleu(candidate, reference, 4),
            rouge_l(candidate, reference)
        );
    }
    println!("\nROUGE-L(\"a b c d\", \"a c d\") = {:.6} (6/7 = {:.6})", rouge_l("a b c d", "a c d"), 6.0 / 7.0);
}
