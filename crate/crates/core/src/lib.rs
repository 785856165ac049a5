pub mod driver;
pub mod efg;
pub mod error;
pub mod game;
pub mod gamma;
pub mod gradient;
pub mod learner;
mod linalg;
pub mod matchers;
pub mod verify;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/games-and-gaps.md")]
    mod games_and_gaps {}
    #[doc = include_str!("../../../book/src/gamma.md")]
    mod gamma {}
    #[doc = include_str!("../../../book/src/regret-matching.md")]
    mod regret_matching {}
    #[doc = include_str!("../../../book/src/adogd.md")]
    mod adogd {}
    #[doc = include_str!("../../../book/src/self-play.md")]
    mod self_play {}
    #[doc = include_str!("../../../book/src/cfr.md")]
    mod cfr {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
