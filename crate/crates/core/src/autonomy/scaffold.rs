use crate::dsl;
use crate::model::{AgentPath, Model};

pub const SCAFFOLD_ROOT: &str = "System";
pub const SCAFFOLD_HUMAN: &str = "Human";
pub const SCAFFOLD_MACHINE: &str = "Machine";

/// Paths of the human and machine in every scaffold.
pub fn scaffold_parties() -> (AgentPath, AgentPath) {
    (
        AgentPath::from_segments([SCAFFOLD_ROOT, SCAFFOLD_HUMAN]),
        AgentPath::from_segments([SCAFFOLD_ROOT, SCAFFOLD_MACHINE]),
    )
}

#[derive(Default)]
struct Recipe {
    /// Carried objects on Human.outbox -> Machine.inbox.
    to_machine: &'static str,
    /// Carried objects on Machine.outbox -> Human.inbox.
    to_human: &'static str,
    human_rules: &'static str,
    machine_rules: &'static str,
    machine_states: &'static str,
    /// Machine.telemetry -> Human.monitor carries metrics; `internal` stays local.
    telemetry: bool,
    internal: bool,
    /// Carried objects on Machine.internal -> Machine.inbox.
    loopback: &'static str,
    /// Machine.effector -> Plant.tasks.
    plant: bool,
}

const ACT: &str = "    rule act: on generic(\"order\") then {\n      select first\n      emit effector task/single selected\n    }\n";

fn recipe(level: u8) -> Option<Recipe> {
    let order = "generic(\"order\")/single";
    let r = match level {
        1 => Recipe {
            to_machine: order,
            machine_rules: ACT,
            plant: true,
            ..Recipe::default()
        },
        2 | 3 => Recipe {
            to_machine: order,
            machine_rules: if level == 2 {
                "    rule act: on generic(\"order\") then {\n      select first\n      emit effector task/single selected\n      emit telemetry metric/single [load { value = 1 }]\n      emit internal metric/single [heat { value = 1 }]\n    }\n"
            } else {
                "    rule act: on generic(\"order\") then {\n      select first\n      emit effector task/single selected\n      emit telemetry metric/single [load { value = 1 }]\n    }\n"
            },
            telemetry: true,
            internal: level == 2,
            plant: true,
            ..Recipe::default()
        },
        4 => Recipe {
            to_machine: order,
            to_human: "task/single",
            machine_rules: "    rule act: on generic(\"order\") then {\n      delegate 50% {\n        emit outbox task/single trigger\n      }\n      select first\n      emit effector task/single selected\n    }\n",
            plant: true,
            ..Recipe::default()
        },
        5 => Recipe {
            to_machine: "generic(\"order\")/single, reaction(veto)/single",
            machine_rules: "    rule act: on generic(\"order\") if not halted then {\n      select first\n      emit effector task/single selected\n    }\n    rule halt: on reaction(veto) then {\n      abort_pending\n      set halted = true\n    }\n",
            machine_states: "    state halted = false\n",
            plant: true,
            ..Recipe::default()
        },
        6 => Recipe {
            to_machine: "reaction(veto)/single",
            to_human: "notification(always)/single, candidates/single",
            machine_rules: "    rule propose: on start then {\n      emit internal candidates/all [plan { value = 1 }, hold { value = 0 }]\n    }\n    rule decide: on candidates then {\n      select first\n      emit outbox notification(always)/single selected\n      emit outbox candidates/single selected\n      veto_window 14 {\n        emit effector task/single selected\n      }\n    }\n    rule vetoed: on reaction(veto) then {\n      abort_pending\n    }\n",
            internal: true,
            loopback: "candidates/all",
            plant: true,
            ..Recipe::default()
        },
        7 => Recipe {
            to_machine: "generic(\"order\")/single, reaction(acceptance)/single",
            to_human: "candidates/single",
            machine_rules: "    rule propose: on generic(\"order\") then {\n      select first\n      emit outbox candidates/single selected\n      set pending = true\n    }\n    rule approved: on reaction(acceptance) if pending then {\n      emit effector task/single trigger\n      set pending = false\n    }\n",
            machine_states: "    state pending = false\n",
            plant: true,
            ..Recipe::default()
        },
        8..=10 => Recipe {
            to_machine: "generic(\"order\")/single, generic(\"choice\")/single",
            to_human: match level {
                8 => "candidates/single",
                9 => "candidates/selection",
                _ => "candidates/all",
            },
            human_rules: "    rule pick: on candidates then {\n      select first\n      emit outbox generic(\"choice\")/single selected\n    }\n",
            machine_rules: match level {
                8 => "    rule offer: on generic(\"order\") then {\n      emit outbox candidates/single [a { value = 1 }]\n    }\n    rule run: on generic(\"choice\") then {\n      emit effector task/single trigger\n    }\n",
                9 => "    rule offer: on generic(\"order\") then {\n      emit outbox candidates/selection [a { value = 1 }, b { value = 2 }]\n    }\n    rule run: on generic(\"choice\") then {\n      emit effector task/single trigger\n    }\n",
                _ => "    rule offer: on generic(\"order\") then {\n      emit outbox candidates/all [a { value = 1 }, b { value = 2 }, c { value = 3 }]\n    }\n    rule run: on generic(\"choice\") then {\n      emit effector task/single trigger\n    }\n",
            },
            plant: true,
            ..Recipe::default()
        },
        11 => Recipe {
            to_machine: "candidates/selection, generic(\"choice\")/single",
            to_human: "candidates/selection",
            human_rules: "    rule pick: on candidates then {\n      select first\n      emit outbox generic(\"choice\")/single selected\n    }\n",
            machine_rules: "    rule refine: on candidates then {\n      emit outbox candidates/selection trigger\n    }\n    rule run: on generic(\"choice\") then {\n      emit effector task/single trigger\n    }\n",
            plant: true,
            ..Recipe::default()
        },
        12 => Recipe {
            to_machine: "candidates/all",
            machine_rules: "    rule act: on candidates then {\n      select first\n      emit effector task/single selected\n    }\n",
            plant: true,
            ..Recipe::default()
        },
        13 | 15 => Recipe {
            to_machine: order,
            to_human: if level == 13 {
                "notification(discretion)/single"
            } else {
                "notification(always)/single"
            },
            machine_rules: if level == 13 {
                "    rule act: on generic(\"order\") then {\n      select first\n      emit effector task/single selected\n      emit outbox notification(discretion)/single selected\n    }\n"
            } else {
                "    rule act: on generic(\"order\") then {\n      select first\n      emit effector task/single selected\n      emit outbox notification(always)/single selected\n    }\n"
            },
            plant: true,
            ..Recipe::default()
        },
        14 => Recipe {
            to_machine: "generic(\"order\")/single, instruction(request)/single",
            to_human: "notification(on_request)/single",
            machine_rules: "    rule act: on generic(\"order\") then {\n      select first\n      emit effector task/single selected\n      set done = done + 1\n    }\n    rule report: on instruction(request) then {\n      emit outbox notification(on_request)/single [status { done = done }]\n    }\n",
            machine_states: "    state done = 0\n",
            plant: true,
            ..Recipe::default()
        },
        16 => Recipe {
            to_machine: "task/single",
            to_human: "generic(\"report\")/single",
            human_rules: "    rule assign: on generic(\"report\") then {\n      select first\n      emit outbox task/single selected\n    }\n",
            machine_rules: "    rule work: on task then {\n      emit effector task/single trigger\n      emit outbox generic(\"report\")/single trigger\n    }\n",
            plant: true,
            ..Recipe::default()
        },
        17 => Recipe {
            to_machine: "task/single",
            machine_rules: "    rule work: on task then {\n      emit effector task/single trigger\n    }\n",
            plant: true,
            ..Recipe::default()
        },
        18 | 19 => Recipe {
            to_machine: "instruction(instantiate)/single",
            machine_rules: if level == 18 {
                "    rule start: on instruction(instantiate) then {\n      emit effector task/single trigger\n      emit telemetry metric/single [progress { value = 1 }]\n    }\n"
            } else {
                "    rule start: on instruction(instantiate) then {\n      select first\n      emit effector task/single selected\n      emit telemetry metric/single [progress { value = 1 }]\n    }\n"
            },
            telemetry: true,
            plant: true,
            ..Recipe::default()
        },
        20 => Recipe {
            human_rules: "    rule decide: on generic(\"need\") then {\n      select first\n      set busy = true\n    }\n",
            ..Recipe::default()
        },
        _ => return None,
    };
    Some(r)
}

/// DSL source of the minimal model for an autonomy level (1 to 20).
pub fn scaffold_source(level: u8) -> Option<String> {
    let r = recipe(level)?;
    let mut s = format!("agent {SCAFFOLD_ROOT} {{\n  agent {SCAFFOLD_HUMAN} {{\n");
    s += "    sensor inbox: generic(\"bus\")\n";
    if r.telemetry {
        s += "    sensor monitor: generic(\"bus\")\n";
    }
    s += "    actuator outbox: generic(\"bus\")\n    functional \"human\"\n";
    s += r.human_rules;
    if level == 20 {
        s += "    state busy = false\n";
    }
    s += &format!("  }}\n  agent {SCAFFOLD_MACHINE} {{\n");
    s += "    sensor inbox: generic(\"bus\")\n    actuator outbox: generic(\"bus\")\n";
    if r.plant {
        s += "    actuator effector: generic(\"bus\")\n";
    }
    if r.telemetry {
        s += "    actuator telemetry: generic(\"bus\")\n";
    }
    if r.internal {
        s += "    actuator internal: generic(\"bus\")\n";
    }
    s += r.machine_rules;
    s += r.machine_states;
    s += "  }\n";
    if r.plant {
        s += "  calling agent Plant {\n    sensor tasks: generic(\"bus\")\n  }\n";
    }
    let h = SCAFFOLD_HUMAN;
    let m = SCAFFOLD_MACHINE;
    if !r.to_machine.is_empty() {
        s += &format!("  {h}.outbox -> {m}.inbox carries {}\n", r.to_machine);
    }
    if !r.to_human.is_empty() {
        s += &format!("  {m}.outbox -> {h}.inbox carries {}\n", r.to_human);
    }
    if !r.loopback.is_empty() {
        s += &format!("  {m}.internal -> {m}.inbox carries {}\n", r.loopback);
    }
    if r.telemetry {
        s += &format!("  {m}.telemetry -> {h}.monitor carries metric/single\n");
    }
    if r.plant {
        s += &format!("  {m}.effector -> Plant.tasks carries task/single\n");
    }
    s += "}\n";
    Some(s)
}

/// The minimal model for an autonomy level, in canonical form.
pub fn scaffold_level(level: u8) -> Option<Model> {
    let source = scaffold_source(level)?;
    let (model, diags) = dsl::parse(&source, "<scaffold>");
    debug_assert!(diags.is_empty(), "scaffold {level}: {diags:?}");
    Some(model)
}
