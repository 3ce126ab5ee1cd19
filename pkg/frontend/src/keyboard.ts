// Keyboard-first triage: the reviewer's hands stay on A (accept),
// R (reject), and the arrows.

export type Action = "accept" | "reject" | "next" | "prev" | "clear";

export function actionForKey(key: string): Action | null {
  switch (key.toLowerCase()) {
    case "a":
      return "accept";
    case "r":
      return "reject";
    case "arrowdown":
    case "arrowright":
    case "j":
      return "next";
    case "arrowup":
    case "arrowleft":
    case "k":
      return "prev";
    case "escape":
      return "clear";
    default:
      return null;
  }
}
