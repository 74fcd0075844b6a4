use fld_core::codec::record::{decode_record, encode_record};
use fld_core::codec::{lex, parse_prompt, parse_response, render_prompt, serialize_response, Token, TokenStream};
use fld_core::synth::{random_prompt, random_response, random_task_record};
use fld_core::Task;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

fn any_task() -> impl Strategy<Value = Task> {
    (0..Task::ALL.len()).prop_map(|i| Task::ALL[i])
}

/// Drops or inserts one location token.
fn mutate_arity(ts: &TokenStream, rng: &mut StdRng) -> TokenStream {
    let mut items = ts.items().to_vec();
    let locs: Vec<usize> = items.iter().enumerate().filter(|(_, t)| matches!(t, Token::Loc(_))).map(|(i, _)| i).collect();
    if !locs.is_empty() && rng.gen_bool(0.5) {
        items.remove(locs[rng.gen_range(0..locs.len())]);
    } else {
        let at = rng.gen_range(0..=items.len());
        items.insert(at, Token::Loc(rng.gen_range(0..1000)));
    }
    TokenStream::from_tokens(items).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn response_round_trip(task in any_task(), seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let r = random_response(&mut rng, task);
        let ts = serialize_response(task, &r).unwrap();
        prop_assert_eq!(&parse_response(&ts, task).unwrap(), &r);
        let relexed = lex(&ts.to_string()).unwrap();
        prop_assert_eq!(&relexed, &ts);
        prop_assert_eq!(parse_response(&relexed, task).unwrap(), r);
    }

    #[test]
    fn arity_mutations_fail(task in any_task(), seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let r = random_response(&mut rng, task);
        let ts = serialize_response(task, &r).unwrap();
        let bad = mutate_arity(&ts, &mut rng);
        prop_assert!(parse_response(&bad, task).is_err(), "{} parsed for {:?}", bad, task);
    }

    #[test]
    fn prompt_round_trip(task in any_task(), seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_prompt(&mut rng, task);
        let raw = render_prompt(&p).unwrap();
        prop_assert_eq!(parse_prompt(&raw, task).unwrap(), p);
    }

    #[test]
    fn record_round_trip(task in any_task(), seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let rec = random_task_record(&mut rng, "r", task);
        let enc = encode_record(&rec, None).unwrap();
        let line = serde_json::to_string(&enc).unwrap();
        let back = decode_record(&serde_json::from_str(&line).unwrap()).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&rec).unwrap());
        prop_assert_eq!(back, rec);
    }
}

#[test]
fn appendix_prompts() {
    let p = fld_core::TaskPrompt::with_text(Task::PhraseGrounding, "A green car parked in front of a yellow building.");
    assert_eq!(
        render_prompt(&p).unwrap(),
        "Locate the phrases in the caption: A green car parked in front of a yellow building."
    );
    assert_eq!(
        render_prompt(&fld_core::TaskPrompt::new(Task::TextDetectionRecognition)).unwrap(),
        "What is the text in the image, with regions?"
    );
}
