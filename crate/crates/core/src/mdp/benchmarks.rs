//! The benchmark MDPs: rotating-agent gridworlds and a flattened coffee robot.

use super::{Mdp, MdpError};

/// Facing direction of the gridworld agent. Rotation is clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Heading {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn clockwise(self) -> Heading {
        Heading::ALL[(self as usize + 1) % 4]
    }

    fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self as usize]
    }

    /// Row/column offset of one step forward; row 0 is the northern wall.
    fn offset(self) -> (isize, isize) {
        match self {
            Heading::North => (-1, 0),
            Heading::East => (0, 1),
            Heading::South => (1, 0),
            Heading::West => (0, -1),
        }
    }
}

impl Heading {
    /// State index of the agent at (`row`, `col`) facing `self` in an `n × n` grid.
    pub fn state(self, n: usize, row: usize, col: usize) -> usize {
        (row * n + col) * 4 + self as usize
    }
}

const FORWARD: usize = 0;
const ROTATE: usize = 1;

/// `n × n` gridworld whose state is (cell, heading). Action 0 moves one cell
/// forward (a wall leaves the agent in place), action 1 rotates clockwise.
/// Both are deterministic. Any action taken in the center cell earns 1.
pub fn make_gridworld(n: usize) -> Result<Mdp, MdpError> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(MdpError::GridSize(n));
    }
    let ns = 4 * n * n;
    let center = n / 2;
    let mut rewards = vec![0.0; ns * 2];
    let mut transitions = vec![0.0; ns * 2 * ns];
    let mut labels = Vec::with_capacity(ns);
    for row in 0..n {
        for col in 0..n {
            for h in Heading::ALL {
                let s = h.state(n, row, col);
                labels.push(format!("({row},{col},{})", h.letter()));
                if row == center && col == center {
                    rewards[s * 2 + FORWARD] = 1.0;
                    rewards[s * 2 + ROTATE] = 1.0;
                }
                let (dr, dc) = h.offset();
                let (r2, c2) = (row as isize + dr, col as isize + dc);
                let ahead = if (0..n as isize).contains(&r2) && (0..n as isize).contains(&c2) {
                    h.state(n, r2 as usize, c2 as usize)
                } else {
                    s
                };
                transitions[(s * 2 + FORWARD) * ns + ahead] = 1.0;
                transitions[(s * 2 + ROTATE) * ns + h.clockwise().state(n, row, col)] = 1.0;
            }
        }
    }
    Mdp::new(ns, 2, rewards, transitions, Some(labels))
}

/// Binary features of the coffee-robot state; the state index is the sum of
/// the bits that are set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoffeeFeature {
    AtCafe = 1,
    HasUmbrella = 2,
    Wet = 4,
    Raining = 8,
    RobotHasCoffee = 16,
    UserHasCoffee = 32,
}

impl CoffeeFeature {
    pub const ALL: [CoffeeFeature; 6] = [
        CoffeeFeature::AtCafe,
        CoffeeFeature::HasUmbrella,
        CoffeeFeature::Wet,
        CoffeeFeature::Raining,
        CoffeeFeature::RobotHasCoffee,
        CoffeeFeature::UserHasCoffee,
    ];

    #[inline]
    pub fn bit(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn holds(self, state: usize) -> bool {
        state & self.bit() != 0
    }

    fn short(self) -> &'static str {
        match self {
            CoffeeFeature::AtCafe => "cafe",
            CoffeeFeature::HasUmbrella => "umbrella",
            CoffeeFeature::Wet => "wet",
            CoffeeFeature::Raining => "rain",
            CoffeeFeature::RobotHasCoffee => "rhc",
            CoffeeFeature::UserHasCoffee => "uhc",
        }
    }
}

/// Action names of [`make_coffee_robot`], in index order.
pub const COFFEE_ACTIONS: [&str; 4] = ["go", "buy-coffee", "get-umbrella", "deliver-coffee"];

/// Flattened coffee-robot MDP: 64 states, 4 actions.
///
/// - go: switches location with probability 0.9; gets the robot wet if it is
///   raining and it has no umbrella (whether or not the move succeeds).
/// - buy-coffee: at the café, the robot gets coffee with probability 0.9.
/// - get-umbrella: at the office, the robot gets an umbrella with probability 0.9.
/// - deliver-coffee: at the office holding coffee, the user gets it with
///   probability 0.8; otherwise it is dropped. The robot's coffee is gone either way.
///
/// Every other case is a no-op, and rain never changes. The reward of every
/// action is `0.9·[user has coffee] + 0.1·[robot is dry]`.
pub fn make_coffee_robot() -> Mdp {
    use CoffeeFeature::*;
    let ns = 64;
    let na = COFFEE_ACTIONS.len();
    let mut rewards = vec![0.0; ns * na];
    let mut transitions = vec![0.0; ns * na * ns];
    let mut labels = Vec::with_capacity(ns);
    for s in 0..ns {
        let mut name: Vec<&str> = CoffeeFeature::ALL.iter().filter(|f| f.holds(s)).map(|f| f.short()).collect();
        if !AtCafe.holds(s) {
            name.insert(0, "office");
        }
        labels.push(name.join("+"));

        let r = 0.9 * f64::from(u8::from(UserHasCoffee.holds(s))) + 0.1 * f64::from(u8::from(!Wet.holds(s)));
        let mut outcomes: [Vec<(usize, f64)>; 4] = Default::default();

        let mut after_go = s;
        if Raining.holds(s) && !HasUmbrella.holds(s) {
            after_go |= Wet.bit();
        }
        outcomes[0] = vec![(after_go ^ AtCafe.bit(), 0.9), (after_go, 0.1)];

        outcomes[1] = if AtCafe.holds(s) {
            vec![(s | RobotHasCoffee.bit(), 0.9), (s, 0.1)]
        } else {
            vec![(s, 1.0)]
        };

        outcomes[2] = if !AtCafe.holds(s) {
            vec![(s | HasUmbrella.bit(), 0.9), (s, 0.1)]
        } else {
            vec![(s, 1.0)]
        };

        outcomes[3] = if !AtCafe.holds(s) && RobotHasCoffee.holds(s) {
            let dropped = s & !RobotHasCoffee.bit();
            vec![(dropped | UserHasCoffee.bit(), 0.8), (dropped, 0.2)]
        } else {
            vec![(s, 1.0)]
        };

        for (a, outs) in outcomes.iter().enumerate() {
            rewards[s * na + a] = r;
            for &(t, p) in outs {
                transitions[(s * na + a) * ns + t] += p;
            }
        }
    }
    Mdp::new(ns, na, rewards, transitions, Some(labels)).expect("coffee robot tables are stochastic")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gridworld_sizes() {
        for (n, states) in [(1, 4), (3, 36), (5, 100), (7, 196)] {
            let m = make_gridworld(n).unwrap();
            assert_eq!((m.n_states(), m.n_actions()), (states, 2));
        }
        assert_eq!(make_gridworld(4), Err(MdpError::GridSize(4)));
        assert_eq!(make_gridworld(0), Err(MdpError::GridSize(0)));
    }

    #[test]
    fn forward_into_wall_stays() {
        let m = make_gridworld(3).unwrap();
        let s = Heading::North.state(3, 0, 0);
        assert_eq!(m.next(s, FORWARD)[s], 1.0);
        let west = Heading::West.state(3, 0, 0);
        assert_eq!(m.next(west, FORWARD)[west], 1.0);
        let east = Heading::East.state(3, 0, 0);
        assert_eq!(m.next(east, FORWARD)[Heading::East.state(3, 0, 1)], 1.0);
        assert_eq!(m.next(s, ROTATE)[east], 1.0);
    }

    #[test]
    fn gridworld_reward_only_in_center() {
        let m = make_gridworld(3).unwrap();
        for s in 0..36 {
            let cell = s / 4;
            let expect = if cell == 4 { 1.0 } else { 0.0 };
            assert_eq!(m.reward(s, FORWARD), expect);
            assert_eq!(m.reward(s, ROTATE), expect);
        }
    }

    #[test]
    fn coffee_shape_and_stochasticity() {
        let m = make_coffee_robot();
        assert_eq!((m.n_states(), m.n_actions()), (64, 4));
        let stochastic = (0..64)
            .flat_map(|s| (0..4).map(move |a| (s, a)))
            .any(|(s, a)| m.next(s, a).iter().filter(|&&p| p > 0.0).count() >= 2);
        assert!(stochastic);
    }

    #[test]
    fn coffee_rain_is_static_and_delivery_works() {
        use CoffeeFeature::*;
        let m = make_coffee_robot();
        for s in 0..64 {
            for a in 0..4 {
                for (t, &p) in m.next(s, a).iter().enumerate() {
                    if p > 0.0 {
                        assert_eq!(Raining.holds(s), Raining.holds(t));
                    }
                }
            }
        }
        let s = RobotHasCoffee.bit();
        let row = m.next(s, 3);
        assert!((row[UserHasCoffee.bit()] - 0.8).abs() < 1e-15);
        assert!((row[0] - 0.2).abs() < 1e-15);
        assert!((m.reward(UserHasCoffee.bit(), 0) - 1.0).abs() < 1e-15);
        assert!((m.reward(Wet.bit(), 2) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn going_out_in_rain_without_umbrella_wets() {
        use CoffeeFeature::*;
        let m = make_coffee_robot();
        let s = Raining.bit();
        let row = m.next(s, 0);
        assert!((row[s | Wet.bit() | AtCafe.bit()] - 0.9).abs() < 1e-15);
        assert!((row[s | Wet.bit()] - 0.1).abs() < 1e-15);
        let dry = Raining.bit() | HasUmbrella.bit();
        assert!((m.next(dry, 0)[dry | AtCafe.bit()] - 0.9).abs() < 1e-15);
    }
}
