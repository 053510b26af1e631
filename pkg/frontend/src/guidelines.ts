/**
 * Evaluation guideline shown beside the board.  Deployment-specific text:
 * edit freely; the panel renders whatever this module exports.
 */

export const GUIDELINE_TITLE = 'How to rank'

export const GUIDELINE_ITEMS: string[] = [
  'Judge the quality of the generated views themselves: sharpness, artifacts, noise, color fidelity in the RGB strip and clean surface detail in the normal strip.',
  'Judge how well the views match the prompt image: same object, same identity, no missing or invented parts.',
  'Judge consistency across views: the views should read as one coherent object seen from different sides, in both RGB and normal domains.',
  'Drag cards left-to-right from best to worst. Drop a card onto another column to declare a tie when quality is genuinely close.',
  'Keyboard: focus a card, use arrow keys to move it between columns, N for a new column, Backspace to return it to the tray.',
]
