//! Arbitrary text through the formula parser. Whatever parses must print
//! back to text that parses to the same formula.

#![no_main]
use libfuzzer_sys::fuzz_target;
use syncausal::epistemics::parse_formula;
use syncausal::Network;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let named = Network::with_names(vec!["a".into(), "b".into(), "c".into()], []).expect("valid network");
    for net in [None, Some(&named)] {
        if let Ok(f) = parse_formula(text, net) {
            let printed = f.display_with(net).to_string();
            let again = parse_formula(&printed, net).expect("printed formula parses");
            assert_eq!(again, f, "{printed}");
        }
    }
});
