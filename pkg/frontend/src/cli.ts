#!/usr/bin/env node
/** CLI: `plot-rates <csv> <out.svg>` and `plot-energy <csv> <out.svg>`. */

import { plotEnergy } from './plotEnergy.js'
import { plotRates } from './plotRates.js'

export function main(argv: string[]): number {
  const [command, csvPath, outPath] = argv
  if (!command || !csvPath || !outPath) {
    console.error('usage: chemo-limit-plots <plot-rates|plot-energy> <csv> <out.svg>')
    return 2
  }
  switch (command) {
    case 'plot-rates':
      return plotRates(csvPath, outPath)
    case 'plot-energy':
      return plotEnergy(csvPath, outPath)
    default:
      console.error(`unknown command: ${command}`)
      return 2
  }
}

const isDirectRun =
  process.argv[1] !== undefined && import.meta.url === `file://${process.argv[1]}`
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)))
}
