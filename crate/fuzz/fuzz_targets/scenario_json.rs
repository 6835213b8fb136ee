//! Arbitrary bytes through the scenario loader. Accepted scenarios that are
//! small enough are also executed once.

#![no_main]
use libfuzzer_sys::fuzz_target;
use syncausal::scenario::Scenario;
use syncausal::simulator::{sample_system, FullInformation};

const MAX_INPUT: usize = 64 * 1024;

fuzz_target!(|data: &[u8]| {
    if data.len() > MAX_INPUT {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(s) = Scenario::from_json(text) else { return };
    let ctx = &s.context;
    if ctx.network.agent_count() <= 4 && ctx.horizon <= 8 {
        let bundle = sample_system(&FullInformation, ctx, 0, 1).expect("accepted scenario executes");
        bundle.runs[0].check_invariants(&ctx.network).expect("run invariants");
    }
});
