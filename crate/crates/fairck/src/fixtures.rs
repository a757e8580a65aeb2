//! Hand-encoded versions of the session types used across the unit tests.
//!
//! These are assembled directly as state tables, bypassing the surface
//! syntax, so tests for the parser, the checkers and the oracles do not all
//! depend on the same construction path. The same types appear in
//! `examples/demo.st` in source form; the test at the bottom of this file
//! pins the two encodings to each other, name by name.

use crate::system::{Alphabet, Node, Polarity, SessionSystem, StateRef};

pub struct DemoSystems {
    pub sys: SessionSystem,
    pub end_in: StateRef,
    pub end_out: StateRef,
    /// `T1 = !true.!{z,p}.T1 + !false.end?`
    pub t1: StateRef,
    pub n1: StateRef,
    /// `S1 = !true.!p.S1 + !false.end?`
    pub s1: StateRef,
    pub p1: StateRef,
    /// `T2 = ?true.!{z,p}.T2 + ?false.end?`
    pub t2: StateRef,
    pub n2: StateRef,
    /// `S2 = ?true.!p.S2 + ?false.end?`
    pub s2: StateRef,
    pub p2: StateRef,
    /// `R1 = ?true.?{z,p}.R1 + ?false.end!`
    pub r1: StateRef,
    pub q1: StateRef,
    /// `R2 = !true.(?z.end! + ?p.R2)`
    pub r2: StateRef,
    pub m2: StateRef,
    /// `R = !{true,false}.R`, which can always keep going.
    pub r: StateRef,
    /// `Rprime = !true.R + !false.end!`
    pub rprime: StateRef,
    /// `!false.end!`, the dead-end continuation of `RAsym`.
    pub f: StateRef,
    /// `RAsym = !true.end! + !false.!false.end!`
    pub rasym: StateRef,
    /// `SAsym = ?true.end?`
    pub sasym: StateRef,
    /// `Z = !z.end?`
    pub z: StateRef,
    /// `N = !{z,p}.end?`
    pub n: StateRef,
    /// `!true.end? + !false.end?`
    pub b_co: StateRef,
    /// `!true.end?`
    pub o_co: StateRef,
    /// `Tco = ?true.Tco + ?false.(!true.end? + !false.end?)`
    pub tco: StateRef,
    /// `Sco = ?true.Sco + ?false.!true.end?`
    pub sco: StateRef,
}

impl DemoSystems {
    /// Labels: 0 = true, 1 = false, 2 = z, 3 = p.
    pub fn build() -> DemoSystems {
        fn node(polarity: Polarity, arms: &[(usize, usize)]) -> Node {
            let mut cont = vec![StateRef(0); 4];
            for &(label, target) in arms {
                cont[label] = StateRef(target);
            }
            Node::Branch { polarity, cont }
        }
        use Polarity::{In, Out};

        let states = vec![
            Node::Nil,                                    // 0
            node(In, &[]),                                // 1 end?
            node(Out, &[]),                               // 2 end!
            node(Out, &[(0, 4), (1, 1)]),                 // 3 T1
            node(Out, &[(2, 3), (3, 3)]),                 // 4 N1
            node(Out, &[(0, 6), (1, 1)]),                 // 5 S1
            node(Out, &[(3, 5)]),                         // 6 P1
            node(In, &[(0, 8), (1, 1)]),                  // 7 T2
            node(Out, &[(2, 7), (3, 7)]),                 // 8 N2
            node(In, &[(0, 10), (1, 1)]),                 // 9 S2
            node(Out, &[(3, 9)]),                         // 10 P2
            node(In, &[(0, 12), (1, 2)]),                 // 11 R1
            node(In, &[(2, 11), (3, 11)]),                // 12 Q1
            node(Out, &[(0, 14)]),                        // 13 R2
            node(In, &[(2, 2), (3, 13)]),                 // 14 M2
            node(Out, &[(0, 15), (1, 15)]),               // 15 R
            node(Out, &[(0, 15), (1, 2)]),                // 16 Rprime
            node(Out, &[(1, 2)]),                         // 17 F
            node(Out, &[(0, 2), (1, 17)]),                // 18 RAsym
            node(In, &[(0, 1)]),                          // 19 SAsym
            node(Out, &[(2, 1)]),                         // 20 Z
            node(Out, &[(2, 1), (3, 1)]),                 // 21 N
            node(Out, &[(0, 1), (1, 1)]),                 // 22 B (two outs)
            node(Out, &[(0, 1)]),                         // 23 O (one out)
            node(In, &[(0, 24), (1, 22)]),                // 24 Tco
            node(In, &[(0, 25), (1, 23)]),                // 25 Sco
        ];
        let alphabet = Alphabet::new(["true", "false", "z", "p"]).unwrap();
        let mut sys = SessionSystem::from_states(alphabet, states);
        for (name, idx) in [
            ("T1", 3),
            ("S1", 5),
            ("T2", 7),
            ("S2", 9),
            ("R1", 11),
            ("R2", 13),
            ("R", 15),
            ("Rprime", 16),
            ("RAsym", 18),
            ("SAsym", 19),
            ("Z", 20),
            ("N", 21),
            ("Tco", 24),
            ("Sco", 25),
        ] {
            sys.add_name(name, StateRef(idx));
        }

        DemoSystems {
            sys,
            end_in: StateRef(1),
            end_out: StateRef(2),
            t1: StateRef(3),
            n1: StateRef(4),
            s1: StateRef(5),
            p1: StateRef(6),
            t2: StateRef(7),
            n2: StateRef(8),
            s2: StateRef(9),
            p2: StateRef(10),
            r1: StateRef(11),
            q1: StateRef(12),
            r2: StateRef(13),
            m2: StateRef(14),
            r: StateRef(15),
            rprime: StateRef(16),
            f: StateRef(17),
            rasym: StateRef(18),
            sasym: StateRef(19),
            z: StateRef(20),
            n: StateRef(21),
            b_co: StateRef(22),
            o_co: StateRef(23),
            tco: StateRef(24),
            sco: StateRef(25),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::DemoSystems;
    use crate::syntax::{elaborate, parse};

    #[test]
    fn hand_encodings_match_the_example_file() {
        let fix = DemoSystems::build();
        let file = parse(include_str!("../examples/demo.st")).expect("demo.st parses");
        let parsed = elaborate(&file).expect("demo.st elaborates");
        let mut combined = fix.sys.clone();
        let map = combined.absorb(&parsed);
        let pairs = [
            (fix.t1, "T1"),
            (fix.n1, "N1"),
            (fix.s1, "S1"),
            (fix.p1, "P1"),
            (fix.t2, "T2"),
            (fix.n2, "N2"),
            (fix.s2, "S2"),
            (fix.p2, "P2"),
            (fix.r1, "R1"),
            (fix.q1, "Q1"),
            (fix.r2, "R2"),
            (fix.m2, "M2"),
            (fix.r, "R"),
            (fix.rprime, "Rprime"),
            (fix.rasym, "RAsym"),
            (fix.sasym, "SAsym"),
            (fix.z, "Z"),
            (fix.n, "N"),
            (fix.tco, "Tco"),
            (fix.b_co, "Bco"),
            (fix.sco, "Sco"),
            (fix.o_co, "Oco"),
        ];
        for (state, name) in pairs {
            let root = parsed
                .lookup_name(name)
                .unwrap_or_else(|| panic!("demo.st defines {name}"));
            assert!(
                combined.bisimilar(state, map[root.0]),
                "{name} differs between the hand encoding and the example file"
            );
        }
        let unusable = parsed.lookup_name("Unusable").expect("demo.st defines Unusable");
        assert_eq!(map[unusable.0], combined.nil(), "Unusable is the nil state");
    }
}
