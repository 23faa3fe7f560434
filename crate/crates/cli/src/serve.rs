use std::net::SocketAddr;

use nightisp::evalstudy::EvalOptions;
use nightisp_server::ServeConfig;

use crate::{CmdResult, Failure, ServeArgs};

pub fn serve(args: ServeArgs) -> CmdResult {
    if !(0.0..=1.0).contains(&args.honeypot_rate) {
        return Err(Failure::Usage("--honeypot-rate must be in [0, 1]".into()));
    }
    if !(args.top_voters > 0.0 && args.top_voters <= 1.0) {
        return Err(Failure::Usage("--top-voters must be in (0, 1]".into()));
    }
    let config = ServeConfig {
        bind: SocketAddr::new(args.bind, args.port),
        manifest: args.images,
        store: args.store,
        honeypot_rate: args.honeypot_rate,
        seed: args.seed,
        eval: EvalOptions {
            top_voters: args.top_voters,
            ..EvalOptions::default()
        },
    };
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Failed(e.to_string()))?;
    rt.block_on(nightisp_server::run(config)).map_err(|e| Failure::Failed(e.to_string()))
}
