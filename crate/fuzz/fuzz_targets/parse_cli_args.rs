#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let mut args: Vec<&str> = s.split('\0').collect();
    // Keep scans small; the target is argument handling, not the numerics.
    if args.len() > 8 || args.iter().any(|a| a.len() > 16 || a.starts_with("--out")) {
        return;
    }
    args.insert(0, "phaselock");
    let code = phaselock::cli::run(args, &mut std::io::sink(), &mut std::io::sink());
    assert!((0..=2).contains(&code));
});
