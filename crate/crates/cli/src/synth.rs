use std::path::PathBuf;

use hdmm_core::synthetic::{generate_dataset, SyntheticSpec};

use crate::failure::Failure;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub subjects: u32,
    #[arg(long, default_value_t = 2)]
    pub examples: u32,
    #[arg(long, default_value_t = 16)]
    pub frames: usize,
    /// Width and height of each frame.
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: Args) -> Result<(), Failure> {
    if args.subjects == 0 || args.examples == 0 || args.frames < 2 || args.size < 4 {
        return Err(Failure::Usage(
            "need at least 1 subject, 1 example, 2 frames and 4x4 pixels".into(),
        ));
    }
    let spec = SyntheticSpec {
        width: args.size,
        height: args.size,
        frames: args.frames,
        subjects: args.subjects,
        examples_per_subject: args.examples,
        seed: args.seed,
        ..SyntheticSpec::default()
    };
    let m = generate_dataset(&args.out, &spec)?;
    println!("wrote {} sequences of {} classes to {}", m.len(), m.class_count(), args.out.display());
    Ok(())
}
