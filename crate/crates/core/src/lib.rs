pub mod bench;
pub mod diff;
pub mod doc;
pub mod hash;
pub mod intent;
pub mod llm;
pub mod orchestrator;
pub mod phrasing;
pub mod planner;
pub mod registry;
pub mod validator;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/documents.md")]
    mod documents {}
    #[doc = include_str!("../../../book/src/apis.md")]
    mod apis {}
    #[doc = include_str!("../../../book/src/changes.md")]
    mod changes {}
    #[doc = include_str!("../../../book/src/rollback.md")]
    mod rollback {}
    #[doc = include_str!("../../../book/src/planners.md")]
    mod planners {}
    #[doc = include_str!("../../../book/src/benchmark.md")]
    mod benchmark {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
