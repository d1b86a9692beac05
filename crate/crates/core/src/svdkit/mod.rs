//! Truncated, incremental randomized and sequential block SVD.

pub mod blocks;
pub mod randomized;
pub mod sequential;
pub mod truncated;

pub use blocks::{
    read_block, read_block_header, write_block, write_manifest, BlockSource, FileBlocks, Manifest, MemoryBlocks, RowScaled,
};
pub use randomized::{rorth_inc, rsvd_inc, IncrementBounds, RangeBasis};
pub use sequential::{srorth, srsvd, BlockStats, SequentialFactors};
pub use truncated::{svd_truncated, SvdFactors};
