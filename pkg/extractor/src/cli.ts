#!/usr/bin/env node
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { Modality, runExtraction } from './extract.js';

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .command('extract', 'embed a directory of media files into an EMB1 dataset', (cmd) =>
      cmd
        .option('modality', {
          choices: ['audio', 'image'] as const,
          demandOption: true,
          describe: 'input media type (audio: WAV, image: binary PPM)',
        })
        .option('input', {
          type: 'string',
          demandOption: true,
          describe: 'directory holding the media files',
        })
        .option('labels', {
          type: 'string',
          demandOption: true,
          describe: 'CSV with header file,label mapping files to class ids',
        })
        .option('out', {
          type: 'string',
          demandOption: true,
          describe: 'output .emb1 path',
        }),
    )
    .demandCommand(1)
    .strict()
    .fail((message, error) => {
      throw error ?? new Error(message);
    })
    .parse();

  if (argv._[0] !== 'extract') {
    throw new Error(`unknown command ${argv._[0]}`);
  }
  const report = runExtraction({
    modality: argv.modality as Modality,
    inputDir: argv.input as string,
    labelsCsv: argv.labels as string,
    outPath: argv.out as string,
  });
  console.log(
    `wrote ${report.written} rows (dim ${report.dim}, ${report.numClasses} classes) ` +
      `to ${argv.out}; skipped ${report.skipped.length}`,
  );
  return 0;
}

main()
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  });
