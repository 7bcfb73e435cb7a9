use crate::codec::TargetMode;
use crate::task::ProblemInstance;

/// Up to three decimals with trailing zeros and a bare point removed:
/// `40.0 -> "40"`, `80.1 -> "80.1"`.
pub fn format_quantity(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn percent(oee: f64) -> String {
    format_quantity(oee * 100.0)
}

/// The prompt for `instance`. Single mode asks for a section; multi mode also
/// lists the strategy levels and their target codes. Paragraphs are separated
/// by a blank line and the text ends with `Answer:`.
pub fn render_prompt(instance: &ProblemInstance, mode: TargetMode) -> String {
    let ct1 = format_quantity(instance.ct_pre);
    let ct2 = format_quantity(instance.ct_asm);
    let oee1 = percent(instance.oee_pre);
    let oee2 = percent(instance.oee_asm);
    let cut = format_quantity(instance.reduction);
    match mode {
        TargetMode::Single => format!(
            "Our manufacturing line has two sections with potential defect sources: pre-assembly (0) and assembly (1). \
             Pre-assembly takes {ct1} seconds with an Overall Equipment Effectiveness(OEE) rate of {oee1}%, while \
             assembly takes {ct2} seconds with an OEE rate of {oee2}%. To reduce total assembly time by {cut} seconds, \
             we need to identify which section can be shortened with minimal defect increase. It's important to note \
             that reducing cycle time will also lead to an increase in line headcount costs. There are two options: \
             reduce pre-assembly time (0) or reduce assembly time (1).\n\
             \n\
             Question: Which section do you choose to optimize?\n\
             \n\
             Answer:"
        ),
        TargetMode::Multi => format!(
            "Our manufacturing line features two sections prone to defects: pre-assembly and assembly. Pre-assembly \
             requires {ct1} seconds to complete with an Overall Equipment Effectiveness (OEE) rate of {oee1}%. \
             Assembly takes {ct2} seconds and has an OEE rate of {oee2}%. To cut total assembly time by {cut} seconds, \
             we must decide which section's duration can be reduced with the least increase in defects. Reducing \
             cycle times will also result in higher line headcount costs. We have three strategy levels for \
             decision-making:\n\
             \n\
             Novice strategy (targets encoded as 0 for pre-assembly, 3 for assembly): Intuitive choice.\n\
             \n\
             Intermediate strategy (targets encoded as 1 for pre-assembly, 4 for assembly): Make decision using key \
             metrics.\n\
             \n\
             Expert strategy (targets encoded as 2 for pre-assembly, 5 for assembly): make well-informed judgments \
             based on a comprehensive understanding of all relevant metric.\n\
             \n\
             Question: Given the different strategy levels, which options would you choose?\n\
             \n\
             Answer:"
        ),
    }
}
