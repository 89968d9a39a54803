use crate::model::SocialConcept;

/// A candidate put forward to a coordinating parent.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    /// Proposing child instance.
    pub child: String,
    /// Candidate id.
    pub candidate: String,
    pub own_utility: f64,
    pub group_utility: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    /// Index into the proposals.
    pub chosen: usize,
    /// No proposal met the concept's constraint; the unconstrained best was taken.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConflictError {
    #[error("the coordinating agent declares no social concept")]
    MissingConcept,
    #[error("no proposals to choose from")]
    NoProposals,
}

/// Chooses among proposals according to a social concept:
///
/// * self-interested: best own utility among those whose group utility is at
///   least `-detriment_limit`;
/// * helpful: best group utility among those with non-negative own utility;
/// * cooperative: best group utility.
///
/// Ties go to the lowest candidate id.
pub fn resolve_conflict(
    concept: Option<SocialConcept>,
    proposals: &[Proposal],
    detriment_limit: f64,
) -> Result<Resolution, ConflictError> {
    let concept = concept.ok_or(ConflictError::MissingConcept)?;
    if proposals.is_empty() {
        return Err(ConflictError::NoProposals);
    }
    let objective = |p: &Proposal| match concept {
        SocialConcept::SelfInterested => p.own_utility,
        SocialConcept::Helpful | SocialConcept::Cooperative => p.group_utility,
    };
    let admissible = |p: &Proposal| match concept {
        SocialConcept::SelfInterested => p.group_utility >= -detriment_limit,
        SocialConcept::Helpful => p.own_utility >= 0.0,
        SocialConcept::Cooperative => true,
    };
    let best = |filter: &dyn Fn(&Proposal) -> bool| {
        let mut chosen: Option<usize> = None;
        for (i, p) in proposals.iter().enumerate() {
            if !filter(p) {
                continue;
            }
            chosen = match chosen {
                Some(c) if !better(objective(p), &p.candidate, objective(&proposals[c]), &proposals[c].candidate) => Some(c),
                _ => Some(i),
            };
        }
        chosen
    };
    match best(&admissible) {
        Some(chosen) => Ok(Resolution {
            chosen,
            fallback: false,
        }),
        None => Ok(Resolution {
            chosen: best(&|_| true).expect("proposals are non-empty"),
            fallback: true,
        }),
    }
}

/// Higher score wins; equal scores go to the lower id.
pub(crate) fn better(score: f64, id: &str, best_score: f64, best_id: &str) -> bool {
    score > best_score || (score == best_score && id < best_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: &str, own: f64, group: f64) -> Proposal {
        Proposal {
            child: "c".into(),
            candidate: id.into(),
            own_utility: own,
            group_utility: group,
        }
    }

    #[test]
    fn helpful_prefers_the_group() {
        let r = resolve_conflict(
            Some(SocialConcept::Helpful),
            &[p("A", 0.0, 10.0), p("B", 5.0, 2.0)],
            0.0,
        )
        .unwrap();
        assert_eq!(r.chosen, 0);
        assert!(!r.fallback);
    }

    #[test]
    fn cooperative_accepts_own_loss() {
        let r = resolve_conflict(Some(SocialConcept::Cooperative), &[p("A", -3.0, 9.0)], 0.0).unwrap();
        assert_eq!(r.chosen, 0);
    }

    #[test]
    fn self_interested_respects_detriment_limit() {
        let props = [p("A", 9.0, -1.0), p("B", 4.0, 0.0)];
        let r = resolve_conflict(Some(SocialConcept::SelfInterested), &props, 0.0).unwrap();
        assert_eq!(r.chosen, 1);
        let r = resolve_conflict(Some(SocialConcept::SelfInterested), &props, 1.0).unwrap();
        assert_eq!(r.chosen, 0);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        for c in SocialConcept::ALL {
            let r = resolve_conflict(Some(*c), &[p("b", 1.0, 1.0), p("a", 1.0, 1.0)], 0.0).unwrap();
            assert_eq!(r.chosen, 1);
        }
    }

    #[test]
    fn empty_constrained_set_falls_back() {
        let r = resolve_conflict(
            Some(SocialConcept::Helpful),
            &[p("A", -1.0, 3.0), p("B", -2.0, 7.0)],
            0.0,
        )
        .unwrap();
        assert_eq!(r, Resolution { chosen: 1, fallback: true });
    }

    #[test]
    fn errors() {
        assert_eq!(resolve_conflict(None, &[p("A", 0.0, 0.0)], 0.0), Err(ConflictError::MissingConcept));
        assert_eq!(
            resolve_conflict(Some(SocialConcept::Helpful), &[], 0.0),
            Err(ConflictError::NoProposals)
        );
    }
}
