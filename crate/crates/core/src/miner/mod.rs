//! Mining `<description, testcase, method>` triplets from Java projects.
//!
//! The pipeline parses every file into a [`StructuralIndex`], picks out
//! classes with `@Test` methods, links each to its focal class (mirrored
//! `src/test` ↔ `src/main` path, or `Test` prefix/suffix name), links test
//! methods to public focal methods by name, and takes the focal method's
//! Javadoc plus inline comments as its description.

mod corpus;
mod description;
mod index;
mod linking;

pub use corpus::{
    build_triplets, filter_leakage, index_project, java_files, split_corpus, split_sizes,
    triplets_from_index, CorpusError, CorpusSplit, MineOptions, MineOutcome, MineReport, Triplet,
};
pub use description::{
    extract_description, normalize_inline, normalize_javadoc, DescriptionError, DescriptionKind,
    LengthBounds,
};
pub use index::{
    normalize_path, parse_source, ClassId, ClassInfo, IndexFragment, MethodId, MethodInfo,
    SourceFile, Span, StructuralIndex, Visibility,
};
pub use linking::{
    eq_ignore_first_case, focal_name_candidates, identify_test_classes, match_focal_class,
    match_focal_method, mirrored_main_path, strip_test_affix, FocalMethodMatch, LinkNote,
    MatchKind, TestClassLink,
};
