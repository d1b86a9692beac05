//! Sequential randomized SVD of a matrix stored as column blocks on disk.
//!
//! Writes a random low-rank matrix as a block manifest, factorizes it block by block and
//! compares against the dense SVD. A second run repeats one block three times to show that
//! correlated blocks add nothing to the basis.
//!
//! `cargo run --release --example srsvd_blocks -- [rows] [cols] [rank] [blocks]`

use cecm::bench::{random_low_rank, random_partition, singular_value_difference, split_columns};
use cecm::svdkit::{srsvd, svd_truncated, write_manifest, BlockSource, FileBlocks};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(1500);
    let m = args.get(1).copied().unwrap_or(400);
    let rank = args.get(2).copied().unwrap_or(60);
    let p = args.get(3).copied().unwrap_or(6);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_low_rank(n, m, rank, 1e6, &mut rng);
    let widths = random_partition(m, p, &mut rng);
    let dir = tempfile::tempdir()?;
    let manifest = dir.path().join("snapshots.json");
    write_manifest(&manifest, &split_columns(&a, &widths))?;

    let blocks = FileBlocks::open(&manifest)?;
    println!("{}x{} matrix in {} blocks of widths {widths:?}", blocks.nrows(), blocks.total_cols(), blocks.block_count());
    let (f, stats) = srsvd(&blocks, 0.0, 1)?;
    let dense = svd_truncated(&a, 0.0, None)?;
    let diff = singular_value_difference(&dense.singular, &f.singular);
    println!("srsvd rank {}, dense rank {}, relative singular value difference {diff:.2e}", f.rank, dense.rank);
    println!("basis vectors added per block {:?}, range-finder iterations {:?}", stats.added, stats.iterations);

    let one = a.columns(0, widths[0]).into_owned();
    let manifest = dir.path().join("repeated.json");
    write_manifest(&manifest, &[one.clone(), one.clone(), one])?;
    let (f, stats) = srsvd(&FileBlocks::open(&manifest)?, 0.0, 1)?;
    println!("repeated block: rank {}, added per block {:?}", f.rank, stats.added);
    Ok(())
}
